"""Experiment configuration, PGM images and curve tables on disk."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sampling import KernelPoly

DISTRIBUTIONS = ("uniform", "optimal", "estimated", "reordered-optimal", "reordered-estimated")


class ConfigError(ValueError):
    pass


class PGMError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph_kind: str = "geometric"
    graph_n: int = 300
    graph_radius: float = 0.15
    graph_sigma: float = 0.075
    graph_path: str | None = None
    graph_knn: int = 10
    kernels: list = field(default_factory=lambda: [KernelPoly((1.0, 1.0))])
    k: int = 10
    delta: float = 0.995
    epsilon: float = 0.05
    m_grid: list | None = None
    trials: int = 500
    seed: int = 0
    distributions: list = field(default_factory=lambda: ["uniform", "optimal", "estimated"])
    cheby_order: int = 100
    cheby_cutoff: float | None = None
    probes: int = 500
    threshold: float = 0.995
    hops: int | None = None
    energy: float = 0.92
    image_path: str | None = None
    out_dir: str = "out"
    literal_delta: bool = False

    def validate(self):
        if not (0 < self.delta < 1 and 0 < self.epsilon < 1):
            raise ConfigError("delta and epsilon must lie in (0, 1)")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.m_grid is not None:
            g = list(self.m_grid)
            if not g or any(b <= a for a, b in zip(g, g[1:])) or g[0] < 1:
                raise ConfigError("m.grid must be a strictly increasing list of positive counts")
        bad = [d for d in self.distributions if d not in DISTRIBUTIONS]
        if bad:
            raise ConfigError(f"unknown distribution(s): {', '.join(bad)}")
        if self.cheby_order < 1 or self.probes < 1:
            raise ConfigError("cheby.order and probes.t must be positive")
        return self

    def grid(self, points=20, top=40):
        """The configured m grid, or ``points`` values spaced from k to ``top * k``."""
        if self.m_grid is not None:
            return list(self.m_grid)
        g = np.round(np.linspace(self.k, top * self.k, points)).astype(int)
        return sorted(set(g.tolist()))


def _parse_bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _grid(text):
    return [int(t) for t in re.split(r"[,\s]+", text.strip()) if t]


def _kernels(text):
    return [KernelPoly.parse(part.strip()) for part in text.split(";") if part.strip()]


def _names(text):
    return [t.strip() for t in text.split(",") if t.strip()]


_KEYS = {
    "graph.kind": ("graph_kind", str),
    "graph.n": ("graph_n", int),
    "graph.radius": ("graph_radius", float),
    "graph.sigma": ("graph_sigma", float),
    "graph.path": ("graph_path", str),
    "graph.knn": ("graph_knn", int),
    "kernel": ("kernels", _kernels),
    "k": ("k", int),
    "delta": ("delta", float),
    "epsilon": ("epsilon", float),
    "m.grid": ("m_grid", _grid),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "distributions": ("distributions", _names),
    "cheby.order": ("cheby_order", int),
    "cheby.cutoff": ("cheby_cutoff", float),
    "probes.t": ("probes", int),
    "threshold": ("threshold", float),
    "hops": ("hops", int),
    "energy": ("energy", float),
    "image.path": ("image_path", str),
    "out.dir": ("out_dir", str),
    "delta.literal": ("literal_delta", _parse_bool),
}


def parse_config(text, source="<config>", base=None):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    cfg = base if base is not None else ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        attr, conv = _KEYS[key]
        try:
            setattr(cfg, attr, conv(value))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path, overrides=(), base=None):
    """Read a config file, then apply ``key=value`` override strings."""
    path = Path(path)
    cfg = parse_config(path.read_text(encoding="utf-8"), str(path), base=base)
    if overrides:
        cfg = parse_config("\n".join(overrides), "<overrides>", base=cfg)
    return cfg


def _pgm_token(buf, pos):
    # whitespace and '#' comments may separate header fields
    while True:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < len(buf) and not buf[pos:pos + 1].isspace():
        pos += 1
    return buf[start:pos], pos


def read_pgm(path):
    """Binary 8-bit PGM (P5) as a ``height x width`` uint8 array."""
    buf = Path(path).read_bytes()
    magic, pos = _pgm_token(buf, 0)
    if magic != b"P5":
        raise PGMError(f"{path}: not a binary PGM (magic {magic!r})")
    fields = []
    for _ in range(3):
        tok, pos = _pgm_token(buf, pos)
        if not tok.isdigit():
            raise PGMError(f"{path}: malformed header")
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise PGMError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    if len(buf) - pos < width * height:
        raise PGMError(f"{path}: truncated pixel data")
    data = np.frombuffer(buf, dtype=np.uint8, count=width * height, offset=pos)
    return data.reshape(height, width).copy()


def to_uint8(X):
    return np.clip(np.rint(np.asarray(X, dtype=float)), 0, 255).astype(np.uint8)


def write_pgm(X, path):
    img = to_uint8(X)
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


CURVE_FIELDS = ("series", "kind", "m", "statistic", "trials", "stderr", "failures")


@dataclass
class CurveRow:
    series: str
    kind: str
    m: int
    statistic: float
    trials: int
    stderr: float
    failures: int = 0


def write_curve_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_FIELDS)
        for r in rows:
            w.writerow([r.series, r.kind, r.m, f"{r.statistic:.17g}", r.trials,
                        f"{r.stderr:.17g}", r.failures])


def read_curve_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [CurveRow(r["series"], r["kind"], int(r["m"]), float(r["statistic"]),
                         int(r["trials"]), float(r["stderr"]), int(r["failures"]))
                for r in reader]
