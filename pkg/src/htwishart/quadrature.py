"""Low-dimensional quadrature oracles (N <= 2, K = N = 1 densities).

These integrate the defining integrals directly and share no code with the
closed forms in :mod:`.special` and :mod:`.moments`.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .model import DENSITY_OFFSET, ModelParams, ParameterError, log_normalization, require_existence
from .special import AomotoParams

_OPTS = dict(epsabs=1e-14, epsrel=1e-12)


def quad_scalar_case(p: ModelParams, order: int) -> float:
    """<x^{2 order}> for K = N = 1 by adaptive quadrature of the density.

    With a = M Xi Sigma the substitution x = sqrt(a) tan(t) maps the real
    line to (-pi/2, pi/2) and turns the power-law tail into an algebraic
    endpoint singularity (pi/2 - t)^beta, handled by QUADPACK's weighted
    rule.
    """
    if (p.K, p.N) != (1, 1):
        raise ParameterError("quad_scalar_case needs K = N = 1")
    require_existence(1, 1, p.L, DENSITY_OFFSET + 2 * order, f"order-{order} moment")
    a = p.M * float(p.Xi[0, 0]) * float(p.Sigma[0, 0])
    beta = 2.0 * p.L - 2.0 * order - 2.0
    half = math.pi / 2.0

    def f(t):
        u = half - t
        ratio = np.sinc(u / math.pi)  # cos(t) / (pi/2 - t)
        return math.sin(t) ** (2 * order) * ratio**beta

    val, _ = integrate.quad(f, 0.0, half, weight="alg", wvar=(0.0, beta),
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return 2.0 * math.exp(log_normalization(p)) * a ** (order + 0.5) * val


def _triangles(f, lo: float, hi: float) -> float:
    # split along the diagonal so |u1 - u2| is smooth on each piece
    upper, _ = integrate.dblquad(lambda y, x: f(x, y), lo, hi, lambda x: lo, lambda x: x, **_OPTS)
    lower, _ = integrate.dblquad(lambda y, x: f(x, y), lo, hi, lambda x: x, lambda x: hi, **_OPTS)
    return upper + lower


def aomoto_quad(ap: AomotoParams) -> float:
    """Direct quadrature of the Aomoto integral over [0, 1]^N, N <= 2."""
    a, b, g, N, m = ap.a, ap.b, ap.gamma, ap.N, ap.m
    if N == 1:
        val, _ = integrate.quad(lambda u: u**m, 0.0, 1.0, weight="alg", wvar=(a - 1.0, b - 1.0),
                                **_OPTS)
        return val
    if N != 2:
        raise ParameterError("aomoto_quad supports N <= 2")

    def f(u1, u2):
        w = (u1 * u2) ** (a - 1.0) * ((1.0 - u1) * (1.0 - u2)) ** (b - 1.0)
        w *= (u1, u1 * u2)[m - 1] if m else 1.0
        return w * abs(u1 - u2) ** (2.0 * g)

    return _triangles(f, 0.0, 1.0)


def laguerre_upper(a: float, N: int) -> float:
    # exp(-U) U^{a + N + 1} below 1e-30 leaves the tail far under 1e-12 of the total
    U = 40.0
    while -U + (a + N + 1.0) * math.log(U) > math.log(1e-30):
        U *= 1.25
    return U


def laguerre_quad(a: float, N: int, m: int) -> float:
    """Quadrature of the Laguerre-weight Aomoto integral with |Vandermonde| for N <= 2."""
    AomotoParams(a, 1.0, 0.5, N, m)
    U = laguerre_upper(a, N)
    if N == 1:
        val, _ = integrate.quad(lambda s: math.exp(-s) * s**m, 0.0, U, weight="alg",
                                wvar=(a - 1.0, 0.0), **_OPTS)
        return val
    if N != 2:
        raise ParameterError("laguerre_quad supports N <= 2")

    def f(s1, s2):
        w = math.exp(-s1 - s2) * (s1 * s2) ** (a - 1.0)
        w *= (s1, s1 * s2)[m - 1] if m else 1.0
        return w * abs(s1 - s2)

    return _triangles(f, 0.0, U)


def ingham_siegel_quad(q: float, R) -> float:
    """Integral over S > 0 of exp(-tr SR) det^{q-(N+1)/2} S, N <= 2.

    For N = 2 the off-diagonal entry is written s12 = x sqrt(s11 s22) with
    |x| < 1, so det S = s11 s22 (1 - x^2) and the Jacobian is sqrt(s11 s22).
    """
    R = np.atleast_2d(np.asarray(R, dtype=float))
    N = R.shape[0]
    if N == 1:
        r = float(R[0, 0])
        U = laguerre_upper(q, 1) / r
        val, _ = integrate.quad(lambda s: math.exp(-r * s), 0.0, U, weight="alg",
                                wvar=(q - 1.0, 0.0), **_OPTS)
        return val
    if N != 2:
        raise ParameterError("ingham_siegel_quad supports N <= 2")
    e = q - 1.5
    U = laguerre_upper(2.0 * q, 2) / min(np.linalg.eigvalsh(R))

    def f(x, s22, s11):
        root = math.sqrt(s11 * s22)
        tr = R[0, 0] * s11 + R[1, 1] * s22 + 2.0 * R[0, 1] * x * root
        return math.exp(-tr) * (s11 * s22 * (1.0 - x * x)) ** e * root

    val, _ = integrate.tplquad(f, 0.0, U, 0.0, U, -1.0, 1.0, epsabs=1e-10, epsrel=1e-6)
    return val
