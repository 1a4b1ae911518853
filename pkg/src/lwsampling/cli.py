"""Command-line driver.

Subcommands: gen-graph, dist, sample, reconstruct, fm-curve, error-curve, image.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import graph as gmod
from .io import ExperimentConfig, load_config, parse_config, read_pgm
from .reconstruct import reconstruct_bandlimited_ls, reconstruct_tikhonov, relative_error
from .sampling import (
    KernelPoly,
    SamplePlan,
    draw_samples,
    kernel_matrix,
    load_distribution_csv,
    load_plan_csv,
    save_distribution_csv,
    save_plan_csv,
    assemble_plan,
)
from .spectral import save_basis_csv, save_vector_csv, synth_bandlimited

log = logging.getLogger("lwsampling")


def _config(args, **defaults):
    """Command defaults, then the config file, then ``--set`` and ``--out``."""
    base = ExperimentConfig(**defaults)
    overrides = list(args.set or [])
    if args.out:
        overrides.append(f"out.dir = {args.out}")
    if args.config:
        return load_config(args.config, overrides, base=base)
    return parse_config("\n".join(overrides), "<command line>", base=base)


def _setup_for(path):
    return ex.prepare(gmod.load_graph(path))


def cmd_gen_graph(args):
    if args.kind == "geometric":
        g = gmod.gen_random_geometric(args.n, args.radius, args.sigma, args.floor, args.seed)
    else:
        g = gmod.gen_grid_knn(args.width, args.height, args.knn)
    gmod.save_graph(g, args.output)
    if args.coords:
        gmod.save_coords(g, args.coords)
    if args.spectrum:
        save_basis_csv(ex.prepare(g).basis, args.spectrum)
    print(f"wrote {args.output}: n={g.n}, edges={g.num_edges}")


def cmd_dist(args):
    cfg = _config(args)
    setup = _setup_for(args.graph)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for poly in cfg.kernels:
        op = kernel_matrix(setup.L, poly, setup.basis)
        for name, dist in ex.make_distributions(setup, op, cfg.k, cfg.distributions, cfg).items():
            suffix = "" if len(cfg.kernels) == 1 else "_g" + "_".join(f"{a:g}" for a in poly.coeffs)
            path = out / f"dist_{name}{suffix}.csv"
            save_distribution_csv(dist, path)
            print(f"wrote {path}")


def cmd_sample(args):
    setup = _setup_for(args.graph)
    op = kernel_matrix(setup.L, KernelPoly.parse(args.kernel), setup.basis)
    dist = load_distribution_csv(args.dist)
    if dist.n != setup.n:
        sys.exit(f"distribution has {dist.n} entries, graph has {setup.n} vertices")
    if args.signal:
        x = np.loadtxt(args.signal, ndmin=1)
    else:
        x = synth_bandlimited(setup.basis, args.k, seed=[args.seed, 1]).x
        if args.signal_out:
            save_vector_csv(x, args.signal_out)
    omega = draw_samples(dist, args.m, seed=args.seed)
    plan = assemble_plan(op, dist, omega, x, seed=args.seed)
    save_plan_csv(plan, args.output)
    print(f"wrote {args.output}: m={plan.m}, distinct vertices={np.unique(omega).size}")


def cmd_reconstruct(args):
    setup = _setup_for(args.graph)
    op = kernel_matrix(setup.L, KernelPoly.parse(args.kernel), setup.basis)
    omega, probs, y = load_plan_csv(args.plan)
    if y is None:
        sys.exit("plan file has no measurements")
    plan = SamplePlan(omega, probs, op.Phi[omega], y)
    if args.decoder == "tikhonov":
        res = reconstruct_tikhonov(plan, setup.L)
    else:
        res = reconstruct_bandlimited_ls(plan, setup.basis, args.k)
    save_vector_csv(res.x, args.output)
    msg = f"wrote {args.output} ({res.decoder}, residual {res.residual:.3e})"
    if args.truth:
        msg += f", relative error {relative_error(res.x, np.loadtxt(args.truth, ndmin=1)):.6g}"
    print(msg)


def _curve(args, runner, csv_name, plotter, **defaults):
    cfg = _config(args, **defaults)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = runner(cfg)
    ex.write_curves(rows, out / csv_name)
    if not args.no_plot:
        from .plotting import plot_signal

        plotter(rows, out / csv_name.replace(".csv", ".png"))
        if cfg.graph_kind == "geometric":
            g = ex.build_graph(cfg)
            setup = ex.prepare(g)
            x = synth_bandlimited(setup.basis, cfg.k, seed=[cfg.seed, 2]).x
            plot_signal(g, x, out / "signal.png", title=f"{cfg.k}-bandlimited signal")
    print(f"wrote {out / csv_name}")
    return rows


def cmd_fm_curve(args):
    from .plotting import plot_fm_curve

    rows = _curve(args, ex.run_fm_curve, "fm_curve.csv", plot_fm_curve)
    series = sorted({r.series for r in rows})
    for s in series:
        print(f"  {s}: f(m)=1 first at m={ex.smallest_saturating_m(rows, s)}")


def cmd_error_curve(args):
    from .plotting import plot_error_curve

    _curve(args, ex.run_error_curve, "error_curve.csv", plot_error_curve,
           distributions=["optimal", "reordered-optimal", "estimated", "reordered-estimated"],
           trials=200)


def cmd_image(args):
    cfg = _config(args, distributions=["uniform", "estimated", "reordered-estimated"])
    X = read_pgm(args.image)
    try:
        report = ex.run_image_experiment(cfg, X, cfg.out_dir)
    except ex.ImageTooLargeError as exc:
        sys.exit(str(exc))
    if not args.no_plot:
        from .plotting import plot_image_panel

        plot_image_panel(ex.image_panel(report, X), Path(cfg.out_dir) / "image_panel.png")
    print(f"k={report.k} m={report.m}")
    for label, value in report.snr.items():
        print(f"  {label}: SNR {value:.2f} dB")


def _experiment_args(p):
    p.add_argument("--config", help="key = value experiment file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--out", help="output directory (overrides out.dir)")


def build_parser():
    parser = argparse.ArgumentParser(prog="lwsampling", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="generate a graph and write its edge list")
    p.add_argument("--kind", choices=["geometric", "grid"], default="geometric")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--radius", type=float, default=0.15)
    p.add_argument("--sigma", type=float, default=0.075)
    p.add_argument("--floor", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--knn", type=int, default=10)
    p.add_argument("--coords", help="also write 'i x y' vertex coordinates")
    p.add_argument("--spectrum", help="also write the eigenbasis as CSV (small graphs)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("dist", help="compute sampling distributions for a graph")
    p.add_argument("--graph", required=True)
    _experiment_args(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("sample", help="draw a sampling set and record its measurements")
    p.add_argument("--graph", required=True)
    p.add_argument("--kernel", default="1,1", help="coefficients, constant term first")
    p.add_argument("--dist", required=True, help="distribution CSV from 'dist'")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=10, help="bandwidth of the synthesised signal")
    p.add_argument("--signal", help="signal CSV; a random bandlimited one is drawn if absent")
    p.add_argument("--signal-out", help="where to save the synthesised signal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reconstruct", help="recover a signal from a plan file")
    p.add_argument("--graph", required=True)
    p.add_argument("--kernel", default="1,1")
    p.add_argument("--plan", required=True)
    p.add_argument("--decoder", choices=["tikhonov", "bandlimited-ls"], default="tikhonov")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--truth", help="ground-truth signal CSV for the relative error")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reconstruct)

    for name, func, text in [
        ("fm-curve", cmd_fm_curve, "probability that the sampled embedding holds, per m"),
        ("error-curve", cmd_error_curve, "mean relative reconstruction error, per m"),
    ]:
        p = sub.add_parser(name, help=text)
        _experiment_args(p)
        p.add_argument("--no-plot", action="store_true", help="skip the PNG figures")
        p.set_defaults(func=func)

    p = sub.add_parser("image", help="reconstruct an 8-bit PGM image from local measurements")
    p.add_argument("image")
    _experiment_args(p)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_image)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.func(args)


if __name__ == "__main__":
    main()
