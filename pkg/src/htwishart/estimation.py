"""Sigma and Xi from a set of observed data matrices.

Only the product of the scales of Sigma and Xi is identified by the
moments, so Xi is fixed to trace N. With M = 2L - 1 - (K + N) the first
moment of the algebraic model equals (tr Xi / N) Sigma, which under the
gauge makes Sigma the average time-side sample covariance. L itself is
supplied by the user.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import FIRST_MOMENT_OFFSET, DataMatrix, DimensionError, ParameterError, require_existence

GAUGE = "tr_xi = N"
MAX_SWEEPS = 100
TOL = 1e-10


def choose_M(K: int, N: int, L: float) -> float:
    """M = 2L - 1 - (K + N), positive whenever the first moment exists."""
    require_existence(K, N, L, FIRST_MOMENT_OFFSET, "choose_M")
    return 2.0 * L - 1.0 - (K + N)


@dataclass(frozen=True)
class EstimationResult:
    sigma_hat: np.ndarray
    xi_hat: np.ndarray
    L: float
    M: float
    gauge: str
    n_batches: int
    residual: float
    residual_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sigma_hat": self.sigma_hat.tolist(),
            "xi_hat": self.xi_hat.tolist(),
            "L": self.L,
            "M": self.M,
            "gauge": self.gauge,
            "n_batches": self.n_batches,
            "residual": self.residual,
            "residual_history": list(self.residual_history),
        }


def _stack(batches) -> np.ndarray:
    if len(batches) < 2:
        raise ParameterError(f"estimation needs at least 2 data matrices, got {len(batches)}")
    arrs = [b.entries if isinstance(b, DataMatrix) else DataMatrix(b).entries for b in batches]
    shape = arrs[0].shape
    for a in arrs:
        if a.shape != shape:
            raise DimensionError(f"data matrices differ in shape: {shape} vs {a.shape}")
    return np.stack(arrs)


def _spd_or_raise(a: np.ndarray, name: str, n_batches: int) -> np.ndarray:
    a = 0.5 * (a + a.T)
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ParameterError(
            f"average {name} is not positive definite with {n_batches} data matrices; "
            "supply more data matrices (rank-deficient data)") from None
    return a


def estimate_sigma_xi(batches, L: float, gauge: str = GAUGE, xi_init=None,
                      max_sweeps: int = MAX_SWEEPS, tol: float = TOL) -> EstimationResult:
    """Alternating (flip-flop) fit of Sigma and Xi under the trace gauge.

    Each sweep sets Sigma from the time-side average X X^T / N using the
    current tr Xi, then Xi from the position-side average X^T X / K using
    tr Sigma, and rescales Xi to trace N. The iteration stops once the
    relative change of both matrices drops below ``tol``.
    """
    if gauge != GAUGE:
        raise ParameterError(f"only the gauge {GAUGE!r} is supported")
    X = _stack(batches)
    n, K, N = X.shape
    M = choose_M(K, N, L)
    Ct = _spd_or_raise(np.einsum("bkn,bln->kl", X, X) / (n * N), "X X^T / N", n)
    Cp = _spd_or_raise(np.einsum("bkn,bkm->nm", X, X) / (n * K), "X^T X / K", n)

    xi = np.eye(N) if xi_init is None else np.array(xi_init, dtype=float)
    if xi.shape != (N, N):
        raise DimensionError(f"xi_init must be {N} x {N}")
    xi = xi * (N / np.trace(xi))
    sigma = Ct * (N / np.trace(xi))
    history = []
    residual = np.inf
    for _ in range(max_sweeps):
        sigma_new = Ct * (N / np.trace(xi))
        xi_new = Cp * (K / np.trace(sigma_new))
        xi_new *= N / np.trace(xi_new)
        residual = max(np.linalg.norm(sigma_new - sigma) / np.linalg.norm(sigma_new),
                       np.linalg.norm(xi_new - xi) / np.linalg.norm(xi_new))
        sigma, xi = sigma_new, xi_new
        history.append(float(residual))
        if residual < tol:
            break
    return EstimationResult(sigma, xi, float(L), M, gauge, n, float(residual), history)
