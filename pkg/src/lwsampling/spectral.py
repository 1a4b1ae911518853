"""Laplacian spectra, bandlimited signals and low-pass graph filters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp


class SpectralError(RuntimeError):
    pass


class BandwidthError(ValueError):
    """Raised when lambda_k == lambda_{k+1}, so the k-band is not well defined."""


@dataclass(frozen=True)
class SpectralBasis:
    eigenvalues: np.ndarray
    U: np.ndarray

    @property
    def n(self):
        return self.eigenvalues.size

    @property
    def lambda_max(self):
        return float(self.eigenvalues[-1])

    def Uk(self, k):
        check_bandwidth(self, k, require_gap=False)
        return self.U[:, :k]


@dataclass(frozen=True)
class GraphSignal:
    x: np.ndarray
    k: int | None = None
    coeffs: np.ndarray | None = None


@dataclass(frozen=True)
class LowPassSpec:
    """Step filter ``1{t <= cutoff}`` approximated on ``[0, lambda_max]``."""

    cutoff: float
    lambda_max: float
    order: int = 100
    jackson: bool = True

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("Chebyshev order must be >= 1")
        if not 0 < self.cutoff:
            raise ValueError("cutoff must be positive")
        if self.lambda_max <= 0:
            raise ValueError("lambda_max must be positive")


def eigendecompose(L) -> SpectralBasis:
    if sp.issparse(L):
        L = L.toarray()
    L = np.asarray(L, dtype=float)
    try:
        lam, U = scipy.linalg.eigh(L, driver="evd")
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"symmetric eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise SpectralError("eigensolver returned non-finite eigenvalues")
    order = np.argsort(lam, kind="stable")
    return SpectralBasis(lam[order], U[:, order])


def band_gap_tol(basis):
    return 1e-9 * max(1.0, abs(basis.lambda_max))


def check_bandwidth(basis, k, require_gap=True):
    if not 1 <= k <= basis.n:
        raise ValueError(f"bandwidth {k} outside [1, {basis.n}]")
    if require_gap and k < basis.n:
        lam = basis.eigenvalues
        if lam[k] - lam[k - 1] <= band_gap_tol(basis):
            raise BandwidthError(
                f"lambda_{k} = lambda_{k + 1} = {lam[k - 1]:.6g}; bandwidth {k} is ill-defined"
            )


def synth_bandlimited(basis: SpectralBasis, k, seed=0) -> GraphSignal:
    """Random k-bandlimited signal with Fourier coefficients uniform on (-1, 1)."""
    check_bandwidth(basis, k)
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=k)
    return GraphSignal(basis.U[:, :k] @ coeffs, k=k, coeffs=coeffs)


def ideal_lowpass_apply(basis: SpectralBasis, cutoff, v):
    """Exact spectral projection onto eigenvalues ``<= cutoff``."""
    keep = basis.eigenvalues <= cutoff
    Uc = basis.U[:, keep]
    return Uc @ (Uc.T @ v)


def lowpass_spec(basis: SpectralBasis, k, order=100, jackson=True) -> LowPassSpec:
    """Low-pass spec keeping the first ``k`` modes of ``basis``.

    The cutoff sits midway between lambda_k and lambda_{k+1}: the ideal
    filter is unchanged, and a smoothed polynomial step is centred in the gap.
    """
    check_bandwidth(basis, k)
    lam = basis.eigenvalues
    cutoff = lam[-1] if k == basis.n else 0.5 * (lam[k - 1] + lam[k])
    return LowPassSpec(float(cutoff), basis.lambda_max, order, jackson)


def lambda_max_bound(L):
    """Upper bound ``2 * max degree`` on the Laplacian spectrum."""
    diag = L.diagonal() if sp.issparse(L) else np.diag(L)
    return float(2.0 * diag.max())


def jackson_damping(order):
    N = order + 1
    j = np.arange(N)
    a = np.pi / (N + 1)
    return ((N - j + 1) * np.cos(j * a) + np.sin(j * a) / np.tan(a)) / (N + 1)


def step_cheby_coeffs(spec: LowPassSpec):
    """Chebyshev coefficients of ``1{t <= cutoff}`` on ``[0, lambda_max]``."""
    x_c = np.clip(2.0 * spec.cutoff / spec.lambda_max - 1.0, -1.0, 1.0)
    theta = np.arccos(x_c)
    j = np.arange(1, spec.order + 1)
    coeffs = np.empty(spec.order + 1)
    coeffs[0] = (np.pi - theta) / np.pi
    coeffs[1:] = -2.0 * np.sin(j * theta) / (np.pi * j)
    if spec.jackson:
        coeffs *= jackson_damping(spec.order)
    return coeffs


def cheby_lowpass_apply(L, spec: LowPassSpec, v):
    """Polynomial low-pass filter via the three-term Chebyshev recurrence.

    ``v`` may be a vector or an ``n x t`` block of probe vectors. Only
    matrix-vector products with ``L`` are used.
    """
    coeffs = step_cheby_coeffs(spec)
    v = np.asarray(v, dtype=float)
    half = spec.lambda_max / 2.0

    def shifted(w):
        # (2 L / lambda_max - I) w
        return (L @ w) / half - w

    t_prev = v
    out = coeffs[0] * t_prev
    t_cur = shifted(v)
    out = out + coeffs[1] * t_cur
    for c in coeffs[2:]:
        t_prev, t_cur = t_cur, 2.0 * shifted(t_cur) - t_prev
        out = out + c * t_cur
    return out


def save_vector_csv(v, path):
    np.savetxt(path, np.asarray(v, dtype=float).reshape(-1, 1), fmt="%.17g")


def save_basis_csv(basis: SpectralBasis, path):
    table = np.column_stack([basis.eigenvalues, basis.U])
    header = ",".join(["lambda"] + [f"u{i + 1}" for i in range(basis.n)])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="")
