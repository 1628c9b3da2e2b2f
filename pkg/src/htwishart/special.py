"""Closed forms of the special integrals behind the matrix moments.

Everything is returned as a natural logarithm (or carries one) because the
Gamma products over n = 1..N overflow doubles already for moderate N and L.
The common normalization

    log_gamma_norm(K, N, L) = N(N-1)/4 ln(pi) + sum_n lnGamma(L - (K+n-1)/2)

is the multivariate Gamma function Gamma_N(L - K/2), which is also the
normalizing constant of a Wishart(dim N, dof 2L - K, scale I/2) density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import (
    FIRST_MOMENT_OFFSET,
    SECOND_MOMENT_OFFSET,
    DimensionError,
    ExistenceError,
    ModelParams,
    logdet_spd,
    cholesky_spd,
    require_existence,
)

POLE_TOL = 1e-9
LOG_PI = math.log(math.pi)


def _check_poles(K: int, N: int, L: float, offsets) -> None:
    for c in offsets:
        den = 2.0 * L - c - (K + N)
        if abs(den) <= POLE_TOL:
            raise ExistenceError(
                f"pole: factor 2L-{c}-(K+N) = {den:.3g} vanishes (K={K}, N={N}, L={L:g})",
                f"2L-{c}-(K+N) must be nonzero")


def log_multigamma(x: float, N: int) -> float:
    """ln of pi^{N(N-1)/4} prod_{n=1..N} Gamma(x - (n-1)/2)."""
    n = np.arange(1, N + 1)
    return N * (N - 1) / 4.0 * LOG_PI + float(np.sum(gammaln(x - (n - 1) / 2.0)))


def log_gamma_norm(K: int, N: int, L: float) -> float:
    return log_multigamma(L - K / 2.0, N)


def ingham_siegel_closed(q: float, R) -> float:
    """ln of the integral over S > 0 of exp(-tr SR) det^{q-(N+1)/2} S."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[0] != R.shape[1]:
        raise DimensionError(f"R must be square, got {R.shape}")
    N = R.shape[0]
    if N == 0:
        return 0.0
    if not q >= (N + 1) / 2.0:
        raise ExistenceError(f"Ingham-Siegel integral needs q >= (N+1)/2 = {(N + 1) / 2:g}, got {q:g}",
                             "q >= (N+1)/2")
    cholesky_spd(R, "R")
    return log_multigamma(q, N) - q * logdet_spd(R)


@dataclass(frozen=True)
class AomotoParams:
    """Parameters of the N-dimensional Aomoto integral over [0, 1]^N."""

    a: float
    b: float
    gamma: float
    N: int
    m: int

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.gamma > 0):
            raise ExistenceError(f"Aomoto integral needs a, b, gamma > 0; got a={self.a}, "
                                 f"b={self.b}, gamma={self.gamma}", "a, b, gamma > 0")
        if int(self.N) != self.N or self.N < 1:
            raise DimensionError(f"N must be a positive integer, got {self.N}")
        if int(self.m) != self.m or not 0 <= self.m <= self.N:
            raise DimensionError(f"m must be an integer in [0, N], got {self.m}")


def aomoto_closed(ap: AomotoParams) -> float:
    """ln of the Aomoto integral, the Selberg integral with m extra factors u_j."""
    a, b, g, N, m = ap.a, ap.b, ap.gamma, int(ap.N), int(ap.m)
    i = np.arange(N)
    total = np.sum(gammaln(a + 1 + i * g) + gammaln(b + i * g) + gammaln(1 + (i + 1) * g)
                   - gammaln(a + b + 1 + (N - 1 + i) * g) - gammaln(1 + g))
    j = np.arange(N - m)
    total += np.sum(np.log(a + b + (N - 1 + j) * g) - np.log(a + j * g))
    return float(total)


def _laguerre_product(a: float, N: int) -> float:
    i = np.arange(N)
    return float(np.sum(gammaln(a + 1 + i / 2.0) + gammaln((3 + i) / 2.0) - gammaln(1.5)))


def aomoto_laguerre_limit(a: float, N: int, m: int) -> float:
    """ln of the integral over s in [0, inf)^N of

        prod_i exp(-s_i) s_i^{a-1} * prod_{j<=m} s_j * |Vandermonde(s)|.
    """
    AomotoParams(a, 1.0, 0.5, N, m)
    return _laguerre_product(a, N) - math.fsum(math.log(a + j / 2.0) for j in range(N - m))


def laguerre_m_n_minus_1(a: float, N: int) -> float:
    """The m = N - 1 case used by the first moment."""
    return _laguerre_product(a, N) - math.log(a)


def laguerre_m_n_minus_2(a: float, N: int) -> float:
    """The m = N - 2 case used by the second moment (N >= 2)."""
    if N < 2:
        raise DimensionError("m = N - 2 needs N >= 2")
    return _laguerre_product(a, N) - (math.log(a) + math.log(a + 0.5))


@dataclass(frozen=True)
class PsiTriple:
    """Logs of the three scalar integrals over S > 0 with weight

        exp(-tr S) det^{L-(N+K+1)/2} S

    times N [S^-1]_11^2 (d), N(N-1) [S^-1]_11 [S^-1]_22 (p) and
    N(N-1) [S^-1]_12^2 (m). For N = 1 the last two vanish (log = -inf).
    """

    log_psi_d: float
    log_psi_p: float
    log_psi_m: float
    K: int
    N: int
    L: float

    @property
    def psi_d(self) -> float:
        return math.exp(self.log_psi_d)

    @property
    def psi_p(self) -> float:
        return math.exp(self.log_psi_p)

    @property
    def psi_m(self) -> float:
        return math.exp(self.log_psi_m)

    def log(self, which: str) -> float:
        return {"d": self.log_psi_d, "p": self.log_psi_p, "m": self.log_psi_m}[which]


def _shifts(K: int, N: int, L: float) -> tuple[float, float, float, float]:
    r = 2.0 * L - (K + N)
    return r - 3.0, r - 2.0, r - 1.0, r


def psi_closed(K: int, N: int, L: float) -> PsiTriple:
    require_existence(K, N, L, SECOND_MOMENT_OFFSET, "Psi integrals")
    _check_poles(K, N, L, (0, 1, 2, 3))
    r3, r2, r1, r = _shifts(K, N, L)
    base = log_gamma_norm(K, N, L) + math.log(4.0) - math.log(r3) - math.log(r1)
    log_d = base + math.log(N)
    if N == 1:
        log_p = log_m = -math.inf
    else:
        log_pm = base + math.log(N * (N - 1)) - math.log(r)
        log_p = log_pm + math.log(r2)
        log_m = log_pm
    triple = PsiTriple(log_d, log_p, log_m, K, N, L)
    if N > 1:
        # ratios to Psi_d, checked in log space
        ok_p = abs(log_p - log_d - math.log((N - 1) * r2 / r)) <= 1e-12 * max(1.0, abs(log_p))
        ok_m = abs(log_m - log_d - math.log((N - 1) / r)) <= 1e-12 * max(1.0, abs(log_m))
        if not (ok_p and ok_m):
            raise ArithmeticError("Psi ratio relations violated")
    return triple


def log_psi_difference(K: int, N: int, L: float) -> float:
    """ln(Psi_p - Psi_m) from its own closed form (an invariant eigenvalue integral)."""
    require_existence(K, N, L, SECOND_MOMENT_OFFSET, "Psi integrals")
    if N < 2:
        return -math.inf
    _, _, r1, r = _shifts(K, N, L)
    return (math.log(4.0 * N * (N - 1)) + log_gamma_norm(K, N, L)
            - math.log(r1) - math.log(r))


def log_psi_d_recursive(K: int, N: int, L: float) -> float:
    """Psi_d by peeling off the first row and column of S.

    The Schur complement integral gives Gamma(L - 3/2 - (K+N)/2), the
    Gaussian integral over the off-diagonal column pi^{(N-1)/2}, and the
    remaining (N-1)-dimensional block is an Ingham-Siegel integral with
    q = L - K/2.
    """
    require_existence(K, N, L, SECOND_MOMENT_OFFSET, "Psi integrals")
    return (math.log(N) + (N - 1) / 2.0 * LOG_PI + gammaln(L - 1.5 - (K + N) / 2.0)
            + ingham_siegel_closed(L - K / 2.0, np.eye(N - 1)))


def log_psi_p_recursive(K: int, N: int, L: float) -> float:
    """Psi_p by peeling off the leading 2 x 2 block of S (N >= 2)."""
    require_existence(K, N, L, SECOND_MOMENT_OFFSET, "Psi integrals")
    if N < 2:
        return -math.inf
    h = (K + N) / 2.0
    lead = (math.log(N * (N - 1)) + (N - 1.5) * LOG_PI + 2.0 * gammaln(L - h)
            + gammaln(L - 1.0 - (K + N + 1) / 2.0) - gammaln(L - 1.0 - h))
    return lead + ingham_siegel_closed(L - K / 2.0, np.eye(N - 2))


def _xi_traces(Xi: np.ndarray) -> tuple[float, float]:
    tr = float(np.trace(Xi))
    return tr, float(np.sum(Xi * Xi.T))


def log_phi1(p: ModelParams) -> float:
    require_existence(p.K, p.N, p.L, FIRST_MOMENT_OFFSET, "first moment")
    _check_poles(p.K, p.N, p.L, (1,))
    tr_xi, _ = _xi_traces(p.Xi)
    return (math.log(2.0 * tr_xi) - math.log(2.0 * p.L - 1.0 - (p.K + p.N))
            + log_gamma_norm(p.K, p.N, p.L))


def phi1(p: ModelParams) -> float:
    """Integral over S > 0 of the weight times tr(Xi S^-1)."""
    return math.exp(log_phi1(p))


def log_phi2(p: ModelParams) -> tuple[float, float]:
    K, N, L = p.K, p.N, p.L
    psi = psi_closed(K, N, L)
    r = 2.0 * L - (K + N)
    tr, tr2 = _xi_traces(p.Xi)
    cross = tr * tr - tr2
    b21 = tr2 + (r - 2.0) / r * cross
    b22 = tr2 + cross / r
    return (math.log(b21) + psi.log_psi_d - math.log(N),
            math.log(b22) + psi.log_psi_d - math.log(N))


def phi2(p: ModelParams) -> tuple[float, float]:
    """Integrals of the weight times tr^2(Xi S^-1) and tr((Xi S^-1)^2)."""
    l21, l22 = log_phi2(p)
    return math.exp(l21), math.exp(l22)
