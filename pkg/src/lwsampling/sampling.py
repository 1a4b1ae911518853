"""Local measurement operators, sampling distributions and measurement bounds.

A measurement at vertex ``i`` is ``<x, phi_i>`` where ``phi_i`` is row ``i``
of ``Phi = g(L)`` for a polynomial ``g``. Since ``Phi`` is a degree-``L``
polynomial in the Laplacian, each row is supported on the ``L``-hop ball
around its vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, bfs_distances
from .spectral import (
    LowPassSpec,
    SpectralBasis,
    cheby_lowpass_apply,
    ideal_lowpass_apply,
)

PROB_FLOOR = 1e-12


class KernelError(ValueError):
    """The kernel polynomial vanishes on the Laplacian spectrum."""


@dataclass(frozen=True)
class KernelPoly:
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coeffs)
        if not coeffs:
            raise ValueError("kernel needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def parse(cls, text):
        """Parse ``"1,1"`` (constant term first) into a kernel."""
        try:
            return cls(tuple(float(t) for t in text.split(",")))
        except ValueError:
            raise ValueError(f"bad kernel coefficient list {text!r}") from None

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def __str__(self):
        return ",".join(f"{a:g}" for a in self.coeffs)

    def constants(self, basis: SpectralBasis, k):
        """``(c1, c2)``: min and max of ``g(lambda_i)^2`` over the first k eigenvalues."""
        g2 = self(basis.eigenvalues[:k]) ** 2
        return float(g2.min()), float(g2.max())


PHI_0 = KernelPoly((1.0,))
PHI_1 = KernelPoly((1.0, 1.0))


@dataclass(frozen=True)
class MeasurementOperator:
    Phi: np.ndarray
    poly: KernelPoly


@dataclass(frozen=True)
class SamplingDistribution:
    p: np.ndarray
    kind: str
    floored: bool = False

    @property
    def n(self):
        return self.p.size


@dataclass(frozen=True)
class SamplePlan:
    omega: np.ndarray
    probs: np.ndarray
    Psi: np.ndarray
    y: np.ndarray | None = None
    seed: int | None = None

    @property
    def m(self):
        return self.omega.size


def kernel_matrix(L, poly: KernelPoly, basis: SpectralBasis | None = None):
    """Dense ``Phi = sum_i alpha_i L^i`` by Horner's scheme."""
    if sp.issparse(L):
        L = L.toarray()
    L = np.asarray(L, dtype=float)
    if basis is not None:
        vals = np.abs(poly(basis.eigenvalues))
        if vals.min() < 1e-12:
            i = int(vals.argmin())
            raise KernelError(f"g vanishes at eigenvalue {basis.eigenvalues[i]:.6g}")
    n = L.shape[0]
    eye = np.eye(n)
    Phi = poly.coeffs[-1] * eye
    for a in reversed(poly.coeffs[:-1]):
        Phi = Phi @ L + a * eye
    return MeasurementOperator(Phi, poly)


def local_measure(op: MeasurementOperator, x, node):
    return float(op.Phi[node] @ np.asarray(x.x if hasattr(x, "x") else x))


def _finalize(p, kind):
    p = np.asarray(p, dtype=float)
    p = p / p.sum()
    floored = bool(np.any(p < PROB_FLOOR))
    if floored:
        p = np.maximum(p, PROB_FLOOR)
        p = p / p.sum()
    return SamplingDistribution(p, kind, floored)


def leverage(basis: SpectralBasis, op: MeasurementOperator, k):
    """Band energies ``||U_k^T phi_i||^2`` for every vertex."""
    B = op.Phi @ basis.U[:, :k]  # row i is (U_k^T phi_i)^T since Phi is symmetric
    return np.einsum("ij,ij->i", B, B)


def uniform_distribution(n):
    if n < 1:
        raise ValueError("n must be at least 1")
    return SamplingDistribution(np.full(n, 1.0 / n), "uniform")


def optimal_distribution(basis: SpectralBasis, op: MeasurementOperator, k):
    """Probabilities proportional to band energy of each measurement row."""
    lev = leverage(basis, op, k)
    total = float(np.sum(op.poly(basis.eigenvalues[:k]) ** 2))
    if total <= 0:
        raise KernelError("kernel vanishes on the whole band")
    return _finalize(lev / total, "optimal")


def estimated_distribution(L, op: MeasurementOperator, spec: LowPassSpec, t, seed=0,
                           basis: SpectralBasis | None = None):
    """Estimate the optimal distribution from ``t`` low-pass filtered Gaussian probes.

    Probes have covariance ``I / t``. They are filtered with the Chebyshev
    approximation of the step at ``spec.cutoff`` unless ``basis`` is given,
    in which case the exact spectral projector is used.
    """
    if t < 1:
        raise ValueError("need at least one probe vector")
    n = op.Phi.shape[0]
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, t)) / np.sqrt(t)
    if basis is not None:
        Rf = ideal_lowpass_apply(basis, spec.cutoff, R)
    else:
        Rf = cheby_lowpass_apply(L, spec, R)
    Z = op.Phi @ Rf
    return _finalize(np.einsum("ij,ij->i", Z, Z), "estimated")


def reorder_distribution(g: Graph, q: SamplingDistribution, hops):
    """Permute the values of ``q`` so the largest ones go to vertices more than ``hops`` apart.

    Vertices are ranked by decreasing probability (ties by index). A packing
    is grown greedily: the best-ranked vertex farther than ``hops`` from every
    chosen vertex joins next and takes the next largest value. Once no such
    vertex remains, the leftover vertices take the leftover values in rank
    order.

    Returns the reordered distribution and the packing, in selection order.
    """
    if hops < 0:
        raise ValueError("hop radius must be non-negative")
    qv = q.p
    n = qv.size
    rank = np.argsort(-qv, kind="stable")
    values = qv[rank]
    covered = np.zeros(n, dtype=bool)
    chosen = []
    pos = 0
    while True:
        while pos < n and covered[rank[pos]]:
            pos += 1
        if pos == n:
            break
        v = int(rank[pos])
        chosen.append(v)
        ball = bfs_distances(g, v, max_hops=hops)
        covered[ball >= 0] = True
    p = np.empty(n)
    p[chosen] = values[:len(chosen)]
    in_packing = np.zeros(n, dtype=bool)
    in_packing[chosen] = True
    rest = rank[~in_packing[rank]]
    p[rest] = values[len(chosen):]
    return SamplingDistribution(p, f"reordered-{q.kind}", q.floored), np.array(chosen)


def draw_samples(dist: SamplingDistribution, m, seed=0):
    """``m`` i.i.d. vertex draws by inverse CDF."""
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cdf = np.cumsum(dist.p)
    cdf[-1] = 1.0
    u = rng.random(m)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def assemble_plan(op: MeasurementOperator, dist: SamplingDistribution, omega, x=None, seed=None):
    omega = np.asarray(omega, dtype=np.int64)
    if omega.size == 0:
        raise ValueError("sampling set is empty")
    Psi = op.Phi[omega]
    y = None
    if x is not None:
        y = Psi @ np.asarray(x.x if hasattr(x, "x") else x)
    return SamplePlan(omega, dist.p[omega], Psi, y, seed)


def coherence(basis: SpectralBasis, op: MeasurementOperator, dist: SamplingDistribution, k,
              omega=None):
    """Largest ratio of band energy to sampling probability.

    Taken over all vertices by default, or over the drawn set ``omega``.
    """
    ratio = leverage(basis, op, k) / dist.p
    if omega is not None:
        ratio = ratio[np.asarray(omega)]
    return float(ratio.max())


def required_measurements(zeta, c1, k, delta, eps):
    """Number of draws that makes the sampled frame bound hold with probability ``1 - eps``."""
    if not (0 < delta < 1 and 0 < eps < 1):
        raise ValueError("delta and eps must lie in (0, 1)")
    if zeta <= 0 or c1 <= 0 or k < 1:
        raise ValueError("zeta and c1 must be positive and k >= 1")
    return int(np.ceil(3.0 * zeta / (c1 * delta**2) * np.log(2.0 * k / eps)))


def save_distribution_csv(dist: SamplingDistribution, path):
    with open(path, "w") as fh:
        fh.write("i,p\n")
        for i, p in enumerate(dist.p, start=1):
            fh.write(f"{i},{p:.17g}\n")


def load_distribution_csv(path, kind="file"):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    p = np.zeros(int(data[:, 0].max()))
    p[data[:, 0].astype(int) - 1] = data[:, 1]
    return SamplingDistribution(p, kind)


def save_plan_csv(plan: SamplePlan, path):
    with open(path, "w") as fh:
        fh.write("section,index,value\n")
        for i, w in enumerate(plan.omega, start=1):
            fh.write(f"omega,{i},{w + 1}\n")
        for i, p in enumerate(plan.probs, start=1):
            fh.write(f"p,{i},{p:.17g}\n")
        if plan.y is not None:
            for i, v in enumerate(plan.y, start=1):
                fh.write(f"y,{i},{v:.17g}\n")


def load_plan_csv(path):
    """Return ``(omega, probs, y)`` from a plan file; ``y`` may be None."""
    sections = {"omega": [], "p": [], "y": []}
    with open(path) as fh:
        next(fh)
        for line in fh:
            name, _, value = line.strip().split(",")
            sections[name].append(float(value))
    omega = np.asarray(sections["omega"], dtype=np.int64) - 1
    y = np.asarray(sections["y"]) if sections["y"] else None
    return omega, np.asarray(sections["p"]), y
