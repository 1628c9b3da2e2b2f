"""Reference values computed without the package's closed-form code.

The algebraic ensemble is a Gaussian mixture over S ~ Wishart(N, 2L-K, I/2),
so every algebraic moment follows from the textbook inverse-Wishart pair
moments combined with Isserlis' theorem. The Psi integrals are evaluated
the same way, in mpmath at 50 digits.
"""
from __future__ import annotations

import numpy as np
import mpmath as mp
from scipy import stats

mp.mp.dps = 50


def iw_pair_moments(N: int, nu: float, Psi: np.ndarray) -> np.ndarray:
    """E[A_ij A_kl] for A ~ inverse-Wishart(Psi, nu) of size N."""
    d = nu - N
    mean = Psi / (d - 1.0)
    den = d * (d - 1.0) ** 2 * (d - 3.0)
    cov = (2.0 * np.einsum("ij,kl->ijkl", Psi, Psi)
           + (d - 1.0) * (np.einsum("ik,jl->ijkl", Psi, Psi) + np.einsum("il,kj->ijkl", Psi, Psi))) / den
    return cov + np.einsum("ij,kl->ijkl", mean, mean)


def _spd_sqrt(a):
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(w)) @ v.T


def column_cov_pairs(K, N, L, M, Xi, model):
    """Q[b,d,e,f] = E[C_bd C_ef] for the (random) column covariance C."""
    if model == "gaussian":
        return np.einsum("bd,ef->bdef", Xi, Xi)
    R = _spd_sqrt(Xi)
    E = iw_pair_moments(N, 2.0 * L - K, 2.0 * np.eye(N))
    Q = np.einsum("bx,yd,ez,wf,xyzw->bdef", R, R, R, R, E)
    return (M / 2.0) ** 2 * Q


def column_cov_mean(K, N, L, M, Xi, model):
    if model == "gaussian":
        return Xi
    return M / (2.0 * L - K - N - 1.0) * Xi


def time_moments(K, N, L, M, Sigma, Xi, model):
    """(first, second) moments of X X^T / N by Isserlis on vec X."""
    C1 = column_cov_mean(K, N, L, M, Xi, model)
    Q = column_cov_pairs(K, N, L, M, Xi, model)
    first = np.trace(C1) / N * Sigma
    S2 = Sigma @ Sigma
    a = np.einsum("bbdd->", Q)
    b = np.einsum("bdbd->", Q)
    second = (a * S2 + b * S2 + b * np.trace(Sigma) * Sigma) / N**2
    return first, second


def position_moments(K, N, L, M, Sigma, Xi, model):
    """(first, second) moments of X^T X / K for the same ensemble."""
    C1 = column_cov_mean(K, N, L, M, Xi, model)
    Q = column_cov_pairs(K, N, L, M, Xi, model)
    # E[(X^T X)_bd] = tr(Sigma) C_bd ; fourth moments pair rows through Sigma
    first = np.trace(Sigma) / K * C1
    tS, tS2 = np.trace(Sigma), np.trace(Sigma @ Sigma)
    # (X^T X X^T X)_bf = sum X_ib X_id X_kd X_kf
    t1 = tS**2 * np.einsum("bddf->bf", Q)
    t2 = tS2 * np.einsum("bddf->bf", Q)
    t3 = tS2 * np.einsum("bfdd->bf", Q)
    second = (t1 + t2 + t3) / K**2
    return first, second


def student_t_moments(a: float, L: float) -> tuple[float, float]:
    """<x^2>, <x^4> of the scalar density proportional to (1 + x^2/a)^-L."""
    return a / (2 * L - 3), 3 * a**2 / ((2 * L - 3) * (2 * L - 5))


def scalar_cdf(a: float, L: float):
    nu = 2.0 * L - 1.0
    return stats.t(df=nu, scale=np.sqrt(a / nu)).cdf


def log_multigamma_mp(x, N: int):
    return mp.mpf(N * (N - 1)) / 4 * mp.log(mp.pi) + mp.fsum(mp.loggamma(x - mp.mpf(n) / 2)
                                                           for n in range(N))


def psi_oracle(K: int, N: int, L: float) -> dict:
    """ln Psi_d, ln Psi_p, ln Psi_m from exact inverse-Wishart moments."""
    L = mp.mpf(L)
    d = 2 * L - K - N
    den = d * (d - 1) ** 2 * (d - 3)
    mean = 2 / (d - 1)
    a11sq = 4 * (2 + 2 * (d - 1)) / den + mean**2
    a11a22 = 4 * 2 / den + mean**2
    a12sq = 4 * (d - 1) / den
    lc = log_multigamma_mp(L - mp.mpf(K) / 2, N)
    out = {"d": lc + mp.log(N * a11sq)}
    if N > 1:
        out["p"] = lc + mp.log(N * (N - 1) * a11a22)
        out["m"] = lc + mp.log(N * (N - 1) * a12sq)
    return {k: float(v) for k, v in out.items()}


def random_spd(rng: np.random.Generator, n: int, lo: float = 0.5, hi: float = 2.0) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (Q * rng.uniform(lo, hi, n)) @ Q.T
