"""Seeded Monte Carlo sweeps and the image reconstruction pipeline.

Every random draw descends from ``cfg.seed``. Trial ``t`` at grid point
``mi`` uses the generator ``default_rng([seed, mi, t])``, so any single
trial can be replayed on its own and the sweep order does not matter.
Different series at the same ``(mi, t)`` share that stream on purpose:
they are compared on common random numbers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graph as gmod
from .io import CurveRow, ExperimentConfig, to_uint8, write_curve_csv, write_pgm
from .reconstruct import (
    SingularSystemError,
    TikhonovSolver,
    delta_lower_bound,
    energy_ratios,
    relative_error,
    snr,
)
from .sampling import (
    KernelPoly,
    SamplePlan,
    assemble_plan,
    draw_samples,
    estimated_distribution,
    kernel_matrix,
    optimal_distribution,
    reorder_distribution,
    uniform_distribution,
)
from .spectral import LowPassSpec, band_gap_tol, eigendecompose, lowpass_spec, synth_bandlimited

log = logging.getLogger(__name__)

# n above which the dense eigendecomposition path is refused
MAX_DENSE_N = 6400


class ImageTooLargeError(ValueError):
    pass


@dataclass
class Setup:
    graph: gmod.Graph
    L: np.ndarray
    L_sparse: object
    basis: object

    @property
    def n(self):
        return self.graph.n


def trial_rng(seed, m_index, trial):
    return np.random.default_rng([seed, m_index, trial])


def build_graph(cfg: ExperimentConfig):
    if cfg.graph_kind == "geometric":
        return gmod.gen_random_geometric(cfg.graph_n, cfg.graph_radius, cfg.graph_sigma,
                                         seed=cfg.seed)
    if cfg.graph_kind == "file":
        if not cfg.graph_path:
            raise ValueError("graph.kind = file needs graph.path")
        return gmod.load_graph(cfg.graph_path)
    raise ValueError(f"unknown graph.kind {cfg.graph_kind!r}")


def prepare(g: gmod.Graph):
    if g.n > MAX_DENSE_N:
        raise ImageTooLargeError(
            f"{g.n} vertices exceeds the dense eigendecomposition limit of {MAX_DENSE_N}"
        )
    L = gmod.build_laplacian(g)
    return Setup(g, L, gmod.build_laplacian(g, sparse=True), eigendecompose(L))


def series_name(poly: KernelPoly, dist):
    return f"g={'_'.join(f'{a:g}' for a in poly.coeffs)}/{dist}"


def make_distributions(setup: Setup, op, k, names, cfg: ExperimentConfig):
    """Requested distributions, keyed by name, for one measurement operator."""
    hops = op.poly.degree if cfg.hops is None else cfg.hops
    out = {}
    base = {}

    def get(name):
        if name not in base:
            if name == "uniform":
                base[name] = uniform_distribution(setup.n)
            elif name == "optimal":
                base[name] = optimal_distribution(setup.basis, op, k)
            elif name == "estimated":
                if cfg.cheby_cutoff is None:
                    spec = lowpass_spec(setup.basis, k, cfg.cheby_order)
                else:
                    spec = LowPassSpec(cfg.cheby_cutoff, setup.basis.lambda_max, cfg.cheby_order)
                base[name] = estimated_distribution(setup.L_sparse, op, spec, cfg.probes,
                                                    seed=[cfg.seed, 1])
        return base[name]

    for name in names:
        if name.startswith("reordered-"):
            out[name], _ = reorder_distribution(setup.graph, get(name.split("-", 1)[1]), hops)
        else:
            out[name] = get(name)
    return out


def _binomial_se(f, trials):
    return math.sqrt(max(f * (1.0 - f), 0.0) / trials)


def run_fm_curve(cfg: ExperimentConfig, setup: Setup | None = None):
    """Fraction of draws whose embedding deviation stays below ``cfg.threshold``."""
    setup = setup or prepare(build_graph(cfg))
    k, basis = cfg.k, setup.basis
    grid = cfg.grid()
    rows = []
    for poly in cfg.kernels:
        op = kernel_matrix(setup.L, poly, basis)
        c1, c2 = poly.constants(basis, k)
        band = op.Phi @ basis.U[:, :k]
        for name, dist in make_distributions(setup, op, k, cfg.distributions, cfg).items():
            for mi, m in enumerate(grid):
                ok = failed = 0
                for t in range(cfg.trials):
                    omega = draw_samples(dist, m, trial_rng(cfg.seed, mi, t))
                    plan = SamplePlan(omega, dist.p[omega], None)
                    try:
                        diag = delta_lower_bound(plan, basis, k, c1, c2,
                                                 literal=cfg.literal_delta, band=band)
                    except np.linalg.LinAlgError:
                        failed += 1
                        continue
                    ok += diag.delta <= cfg.threshold
                f = ok / cfg.trials
                rows.append(CurveRow(series_name(poly, name), "f(m)", m, f, cfg.trials,
                                     _binomial_se(f, cfg.trials), failed))
            log.info("fm-curve %s done", series_name(poly, name))
    return rows


def run_error_curve(cfg: ExperimentConfig, setup: Setup | None = None):
    """Mean relative Tikhonov error over fresh bandlimited signals per grid point."""
    setup = setup or prepare(build_graph(cfg))
    k, basis = cfg.k, setup.basis
    grid = cfg.m_grid if cfg.m_grid is not None else cfg.grid(points=10, top=20)
    rows = []
    for poly in cfg.kernels:
        op = kernel_matrix(setup.L, poly, basis)
        for name, dist in make_distributions(setup, op, k, cfg.distributions, cfg).items():
            for mi, m in enumerate(grid):
                errs = []
                failed = 0
                for t in range(cfg.trials):
                    rng = trial_rng(cfg.seed, mi, t)
                    x = synth_bandlimited(basis, k, seed=rng)
                    omega = draw_samples(dist, m, rng)
                    plan = assemble_plan(op, dist, omega, x)
                    try:
                        x_star = TikhonovSolver(plan, setup.L).solve(plan.y)
                    except SingularSystemError as exc:
                        log.debug("trial %d at m=%d failed: %s", t, m, exc)
                        failed += 1
                        continue
                    errs.append(relative_error(x_star, x.x))
                if failed:
                    log.warning("%s m=%d: %d of %d trials had a singular system",
                                series_name(poly, name), m, failed, cfg.trials)
                errs = np.asarray(errs)
                mean = float(errs.mean()) if errs.size else float("nan")
                se = float(errs.std(ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else 0.0
                rows.append(CurveRow(series_name(poly, name), "mean relative error", m, mean,
                                     cfg.trials, se, failed))
            log.info("error-curve %s done", series_name(poly, name))
    return rows


def pick_bandwidth(basis, ratios, target):
    """Smallest k whose energy ratio reaches ``target``, moved past repeated eigenvalues."""
    k = int(np.argmax(ratios >= target)) + 1 if np.any(ratios >= target) else basis.n
    lam = basis.eigenvalues
    tol = band_gap_tol(basis)
    while k < basis.n and lam[k] - lam[k - 1] <= tol:
        k += 1
    return k


def energy_table(n, ratios):
    """Energy ratios at ``k = ceil(i n / 10000)`` for ``i = 1, 6, 11, ...`` until saturation."""
    rows = []
    i = 1
    while True:
        k = min(n, math.ceil(i * n / 10000))
        rows.append((i, k, float(ratios[k - 1])))
        if k == n or ratios[k - 1] >= 1.0 - 1e-12:
            break
        i += 5
    return rows


@dataclass
class ImageReport:
    k: int
    m: int
    snr: dict
    energy: list
    reconstructions: dict
    distributions: dict
    mean: float


def run_image_experiment(cfg: ExperimentConfig, image, out_dir=None, write=True):
    """Reconstruct an 8-bit image from ``15 k`` local measurements per distribution.

    The pixel grid becomes a k-NN graph and the mean-removed image is the
    graph signal. ``k`` is the smallest bandwidth whose energy ratio reaches
    ``cfg.energy``. SNRs are measured on the mean-removed signal.
    """
    X = np.asarray(image, dtype=float)
    height, width = X.shape
    if height * width > MAX_DENSE_N:
        raise ImageTooLargeError(
            f"{width}x{height} image has {height * width} pixels; the dense spectral path "
            f"handles at most {MAX_DENSE_N}. Downscale the image (e.g. to 64x64)."
        )
    g = gmod.gen_grid_knn(width, height, cfg.graph_knn)
    setup = prepare(g)
    mean = float(X.mean())
    signal = X.ravel() - mean
    ratios = energy_ratios(setup.basis, signal)
    k = pick_bandwidth(setup.basis, ratios, cfg.energy)
    m = 15 * k
    log.info("image %dx%d: k=%d (energy %.3f), m=%d", width, height, k, ratios[k - 1], m)

    snrs, recs, dists = {}, {}, {}
    for poly in cfg.kernels:
        op = kernel_matrix(setup.L, poly, setup.basis)
        for name, dist in make_distributions(setup, op, k, cfg.distributions, cfg).items():
            label = series_name(poly, name)
            omega = draw_samples(dist, m, trial_rng(cfg.seed, 0, 0))
            plan = assemble_plan(op, dist, omega, signal)
            try:
                x_star = TikhonovSolver(plan, setup.L).solve(plan.y)
            except SingularSystemError as exc:
                log.warning("%s: reconstruction failed: %s", label, exc)
                x_star = np.zeros_like(signal)
            snrs[label] = snr(x_star, signal)
            recs[label] = (x_star + mean).reshape(height, width)
            dists[label] = dist.p.reshape(height, width)

    report = ImageReport(k, m, snrs, energy_table(g.n, ratios), recs, dists, mean)
    if write:
        write_image_report(report, X, out_dir or cfg.out_dir)
    return report


def _safe(label):
    return label.replace("/", "_").replace("=", "")


def write_image_report(report: ImageReport, X, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "snr_report.csv", "w") as fh:
        fh.write("series,k,m,snr_db\n")
        for label, value in report.snr.items():
            fh.write(f"{label},{report.k},{report.m},{value:.17g}\n")
    with open(out / "energy_ratios.csv", "w") as fh:
        fh.write("i,k,energy_ratio\n")
        for i, k, e in report.energy:
            fh.write(f"{i},{k},{e:.17g}\n")
    write_pgm(X, out / "original.pgm")
    for label, rec in report.reconstructions.items():
        write_pgm(rec, out / f"recon_{_safe(label)}.pgm")


def write_curves(rows, path):
    write_curve_csv(rows, path)


def smallest_saturating_m(rows, series):
    """Smallest grid m at which f(m) reaches 1 for ``series``; inf if never."""
    hits = [r.m for r in rows if r.series == series and r.statistic >= 1.0]
    return min(hits) if hits else math.inf


def image_panel(report: ImageReport, X):
    """Images for a summary figure: original, distributions and reconstructions."""
    panels = [("original", to_uint8(X))]
    for label, p in report.distributions.items():
        if "uniform" not in label:
            panels.append((f"p {label}", p))
    for label, rec in report.reconstructions.items():
        panels.append((f"{label}  {report.snr[label]:.2f} dB", to_uint8(rec)))
    return panels
