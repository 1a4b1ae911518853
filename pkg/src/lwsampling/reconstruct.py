"""Decoders and reconstruction quality metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.linalg import lapack

from .sampling import SamplePlan
from .spectral import SpectralBasis

COND_LIMIT = 1e14
SNR_CAP_DB = 300.0


class SingularSystemError(np.linalg.LinAlgError):
    pass


class RankDeficientError(np.linalg.LinAlgError):
    """The sampled band operator lost column rank: the embedding failed for this draw."""


@dataclass(frozen=True)
class ReconstructionResult:
    x: np.ndarray
    decoder: str
    residual: float
    rel_error: float | None = None


@dataclass(frozen=True)
class EmbeddingDiagnostic:
    delta: float
    s_min: float
    s_max: float
    m: int
    c1: float
    c2: float

    @property
    def lower_deviation(self):
        return 1.0 - self.s_min / self.c1

    @property
    def upper_deviation(self):
        return self.s_max / self.c2 - 1.0


class TikhonovSolver:
    """Factorisation of ``Psi^T P^-1 Psi + L`` reusable across right-hand sides."""

    def __init__(self, plan: SamplePlan, L):
        if sp.issparse(L):
            L = L.toarray()
        w = 1.0 / plan.probs
        Psi = plan.Psi
        A = (Psi.T * w) @ Psi + np.asarray(L, dtype=float)
        A = 0.5 * (A + A.T)
        anorm = np.abs(A).sum(axis=0).max()
        c, info = lapack.dpotrf(A, lower=True, clean=True, overwrite_a=False)
        if info != 0:
            raise SingularSystemError("regularised normal matrix is not positive definite")
        rcond, info = lapack.dpocon(c, anorm, uplo="L")
        if info != 0 or rcond == 0 or 1.0 / rcond > COND_LIMIT:
            raise SingularSystemError(f"regularised normal matrix is ill-conditioned (rcond={rcond:.3g})")
        self.plan = plan
        self._factor = (c, True)
        self.rcond = float(rcond)
        self._w = w

    def solve(self, y):
        """Reconstruction for measurements ``y`` (length m, or ``m x c``)."""
        y = np.asarray(y, dtype=float)
        rhs = self.plan.Psi.T @ (self._w[:, None] * y if y.ndim == 2 else self._w * y)
        return scipy.linalg.cho_solve(self._factor, rhs)


def _residual(plan, x, y):
    r = (plan.Psi @ x - y) / np.sqrt(plan.probs if np.ndim(y) == 1 else plan.probs[:, None])
    return float(np.linalg.norm(r))


def reconstruct_tikhonov(plan: SamplePlan, L, y=None, truth=None) -> ReconstructionResult:
    """Minimiser of ``1/2 |P^-1/2 (Psi x - y)|^2 + 1/2 x^T L x``.

    ``y`` defaults to the measurements stored on the plan and may be an
    ``m x c`` block, one column per signal.
    """
    y = plan.y if y is None else np.asarray(y, dtype=float)
    if y is None:
        raise ValueError("plan carries no measurements")
    x = TikhonovSolver(plan, L).solve(y)
    rel = relative_error(x, truth) if truth is not None else None
    return ReconstructionResult(x, "tikhonov", _residual(plan, x, y), rel)


def reconstruct_bandlimited_ls(plan: SamplePlan, basis: SpectralBasis, k, y=None,
                               truth=None) -> ReconstructionResult:
    """Least-squares fit of the measurements by a signal in ``span(U_k)``."""
    y = plan.y if y is None else np.asarray(y, dtype=float)
    if y is None:
        raise ValueError("plan carries no measurements")
    s = 1.0 / np.sqrt(plan.probs)
    B = s[:, None] * (plan.Psi @ basis.U[:, :k])
    rhs = s * y if y.ndim == 1 else s[:, None] * y
    coef, _, rank, sv = np.linalg.lstsq(B, rhs, rcond=None)
    if rank < k:
        raise RankDeficientError(f"sampled band operator has rank {rank} < {k}")
    x = basis.U[:, :k] @ coef
    rel = relative_error(x, truth) if truth is not None else None
    return ReconstructionResult(x, "bandlimited-ls", _residual(plan, x, y), rel)


def embedding_extremes(plan: SamplePlan, basis: SpectralBasis, k, band=None):
    """Extreme eigenvalues of ``(1/m) B^T B`` with ``B = P^-1/2 Psi U_k``.

    ``band`` may supply ``Phi U_k`` precomputed, in which case only the rows
    of ``omega`` are touched.
    """
    if band is None:
        B = plan.Psi @ basis.U[:, :k]
    else:
        B = band[plan.omega]
    B = B / np.sqrt(plan.probs)[:, None]
    s = np.linalg.eigvalsh(B.T @ B / plan.m)
    # an eigenvalue at round-off level means B has lost rank; report it as
    # exactly zero, with the same tolerance lstsq uses for its rank decision
    tol = max(B.shape) * np.finfo(float).eps * s[-1]
    s_min = float(s[0]) if s[0] > tol else 0.0
    return s_min, float(s[-1])


def delta_lower_bound(plan: SamplePlan, basis: SpectralBasis, k, c1, c2, literal=False,
                      band=None) -> EmbeddingDiagnostic:
    """Smallest delta for which the sampled frame inequality holds on this draw.

    By default the frame constants are the extreme eigenvalues of
    ``(1/m) B^T B``. ``literal=True`` uses the extreme singular values of
    ``B`` divided by ``m`` instead.
    """
    s_min, s_max = embedding_extremes(plan, basis, k, band=band)
    if literal:
        m = plan.m
        s_min = np.sqrt(max(s_min, 0.0) * m) / m
        s_max = np.sqrt(max(s_max, 0.0) * m) / m
    delta = max(1.0 - s_min / c1, s_max / c2 - 1.0)
    return EmbeddingDiagnostic(float(delta), s_min, s_max, plan.m, c1, c2)


def relative_error(x_star, x):
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("relative error undefined for a zero ground truth")
    return float(np.linalg.norm(np.asarray(x_star) - x) / nx)


def snr(X_star, X):
    """``-10 log10(|X* - X|_F / |X|_F)`` in dB, capped at 300 dB for exact equality."""
    X = np.asarray(X, dtype=float)
    nx = np.linalg.norm(X)
    if nx == 0:
        raise ValueError("SNR undefined for a zero reference")
    err = np.linalg.norm(np.asarray(X_star, dtype=float) - X)
    if err == 0:
        return SNR_CAP_DB
    return float(min(-10.0 * np.log10(err / nx), SNR_CAP_DB))


def energy_ratio(basis: SpectralBasis, k, X):
    """Fraction ``|U_k U_k^T X|_F / |X|_F`` of the signal norm held by the first k modes."""
    return float(energy_ratios(basis, X)[k - 1])


def energy_ratios(basis: SpectralBasis, X):
    """Energy ratio for every bandwidth ``k = 1..n`` at once."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    total = np.linalg.norm(X)
    if total == 0:
        raise ValueError("energy ratio undefined for a zero signal")
    coeff2 = np.sum((basis.U.T @ X) ** 2, axis=1)
    return np.minimum(np.sqrt(np.cumsum(coeff2)) / total, 1.0)
