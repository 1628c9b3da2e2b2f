"""Monte Carlo estimators that check the closed forms.

All estimators run on the chunked stream protocol of :mod:`.sampling`:
each chunk yields (count, mean, sum of squared deviations) and chunks are
merged pairwise in chunk order, so estimates are identical for any number
of worker threads.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .kernels import c64, get_backend
from .model import (
    FIRST_MOMENT_OFFSET,
    SECOND_MOMENT_OFFSET,
    ModelParams,
    ParameterError,
    require_existence,
)
from .moments import (
    first_moment,
    generating_function_gauss,
    matrix_variance,
    normalize_model,
    normalize_side,
    second_moment,
)
from .sampling import DEFAULT_CHUNK, RngState, chunk_sampler, map_chunks, well_conditioned_factors
from .special import log_gamma_norm, psi_closed


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with elementwise standard error.

    ``log_scale`` is a natural-log factor the mean is quoted relative to;
    the estimated quantity is ``mean * exp(log_scale)``.
    """

    mean: np.ndarray | float
    stderr: np.ndarray | float
    count: int
    seed: int
    wallclock_s: float
    stream_id: int = 0
    log_scale: float = 0.0

    def z_scores(self, target) -> np.ndarray:
        diff = np.asarray(self.mean) - np.asarray(target)
        se = np.asarray(self.stderr)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))
        return np.abs(z)

    def to_dict(self) -> dict:
        return {
            "mean": np.asarray(self.mean).tolist(),
            "stderr": np.asarray(self.stderr).tolist(),
            "count": self.count,
            "seed": self.seed,
            "stream_id": self.stream_id,
            "wallclock_s": self.wallclock_s,
            "log_scale": self.log_scale,
        }


@dataclass(frozen=True)
class _Stats:
    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, values: np.ndarray) -> "_Stats":
        mean = values.mean(axis=0)
        return cls(values.shape[0], mean, ((values - mean) ** 2).sum(axis=0))

    def merge(self, other: "_Stats") -> "_Stats":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        return _Stats(n, mean, m2)


def pairwise_merge(parts: list[_Stats]) -> _Stats:
    if len(parts) == 1:
        return parts[0]
    mid = len(parts) // 2
    return pairwise_merge(parts[:mid]).merge(pairwise_merge(parts[mid:]))


def _finish(stats: _Stats, rng: RngState, t0: float, log_scale: float = 0.0) -> McEstimate:
    var = stats.m2 / (stats.n - 1)
    se = np.sqrt(var / stats.n)
    mean = stats.mean
    if np.ndim(mean) == 0:
        mean, se = float(mean), float(se)
    return McEstimate(mean, se, stats.n, rng.seed, time.perf_counter() - t0, rng.stream_id,
                      log_scale)


def _check_count(count: int) -> None:
    if count < 2:
        raise ParameterError("Monte Carlo estimates need count >= 2")


def estimate_moment_mc(p: ModelParams, model: str, order, side: str, count: int,
                       rng: RngState, chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
                       backend=None) -> McEstimate:
    """Empirical first or second matrix moment, or matrix variance."""
    _check_count(count)
    model = normalize_model(model)
    side = normalize_side(side)
    if order not in (1, 2, "variance"):
        raise ParameterError("order must be 1, 2 or 'variance'")
    if model == "algebraic":
        offset = FIRST_MOMENT_OFFSET if order == 1 else SECOND_MOMENT_OFFSET
        require_existence(p.K, p.N, p.L, offset, f"order-{order} estimate")
    kern = backend or get_backend()
    draw = chunk_sampler(p, model, kern)
    iside = 0 if side == "time" else 1
    t0 = time.perf_counter()

    if order in (1, 2):
        def chunk(gen, n):
            X, _ = draw(gen, n)
            return _Stats.of(kern.gram_batch(X, iside, order))

        return _finish(pairwise_merge(map_chunks(chunk, count, rng, chunk_size, threads)), rng, t0)

    def grams(gen, n):
        X, _ = draw(gen, n)
        return kern.gram_batch(X, iside, 1)

    W = map_chunks(grams, count, rng, chunk_size, threads)
    centre = pairwise_merge([_Stats.of(w) for w in W]).mean
    parts = []
    for w in W:
        D = w - centre
        parts.append(_Stats.of(D @ D))
    stats = pairwise_merge(parts)
    corr = count / (count - 1)
    stats = _Stats(stats.n, stats.mean * corr, stats.m2 * corr**2)
    return _finish(stats, rng, t0)


_PSI_WEIGHT = {"d": lambda N: N, "p": lambda N: N * (N - 1), "m": lambda N: N * (N - 1)}


def estimate_psi_mc(which: str, K: int, N: int, L: float, count: int, rng: RngState,
                    chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
                    backend=None) -> McEstimate:
    """Importance-sampling estimate of a Psi integral.

    S is drawn from Wishart(dim N, dof 2L - K, scale 1/2), whose density
    is the integrand weight divided by exp(log_gamma_norm). The returned
    mean therefore estimates Psi / exp(log_gamma_norm); ``log_scale``
    carries that normalization.
    """
    _check_count(count)
    if which not in _PSI_WEIGHT:
        raise ParameterError("which must be 'd', 'p' or 'm'")
    if which in ("p", "m") and N < 2:
        raise ParameterError("Psi_p and Psi_m need N >= 2")
    require_existence(K, N, L, SECOND_MOMENT_OFFSET, "Psi integrals")
    kern = backend or get_backend()
    weight = _PSI_WEIGHT[which](N)
    dof = 2.0 * L - K
    t0 = time.perf_counter()

    def chunk(gen, n):
        T, _ = well_conditioned_factors(gen, N, dof, n, kern)
        e = kern.inverse_entries(T)
        if which == "d":
            f = e[:, 0] ** 2
        elif which == "p":
            f = e[:, 0] * e[:, 1]
        else:
            f = e[:, 2] ** 2
        return _Stats.of(weight * f)

    stats = pairwise_merge(map_chunks(chunk, count, rng, chunk_size, threads))
    return _finish(stats, rng, t0, log_gamma_norm(K, N, L))


def psi_ratio(est: McEstimate, which: str, K: int, N: int, L: float) -> tuple[float, float]:
    """Estimate / closed form, with its standard error."""
    closed = math.exp(psi_closed(K, N, L).log(which) - est.log_scale)
    return est.mean / closed, est.stderr / closed


def mc_generating_function(p: ModelParams, J, count: int, rng: RngState,
                           model: str = "algebraic", chunk_size: int = DEFAULT_CHUNK,
                           threads: int = 1, backend=None) -> McEstimate:
    """Ensemble average of exp(-tr(X X^T J) / N)."""
    _check_count(count)
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape != (p.K, p.K):
        raise ParameterError(f"source matrix must be {p.K} x {p.K}")
    kern = backend or get_backend()
    draw = chunk_sampler(p, model, kern)
    t0 = time.perf_counter()

    def chunk(gen, n):
        X, _ = draw(gen, n)
        return _Stats.of(np.exp(-kern.trace_form(X, c64(J), float(p.N))))

    return _finish(pairwise_merge(map_chunks(chunk, count, rng, chunk_size, threads)), rng, t0)


def mc_generating_function_alg(p: ModelParams, J, count: int, rng: RngState, **kw) -> McEstimate:
    return mc_generating_function(p, J, count, rng, "algebraic", **kw)


# --- verdict table ------------------------------------------------------------

Z_LIMIT = 3.0


def _matrix_rows(target: str, closed: np.ndarray, est: McEstimate) -> list[dict]:
    rows = []
    d = closed.shape[0]
    for i in range(d):
        for j in range(i, d):
            se = float(est.stderr[i, j])
            diff = float(est.mean[i, j] - closed[i, j])
            z = abs(diff) / se if se > 0 else (0.0 if diff == 0 else math.inf)
            rows.append({"target": f"{target}[{i},{j}]", "closed_form": float(closed[i, j]),
                         "estimate": float(est.mean[i, j]), "stderr": se, "z_score": z,
                         "pass": z <= Z_LIMIT})
    return rows


def verification_table(p: ModelParams, count: int, rng: RngState,
                       chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> list[dict]:
    """Closed form vs Monte Carlo for every quantity that exists at ``p``.

    Each target uses its own stream id so the checks are independent.
    """
    rows: list[dict] = []
    stream = rng.stream_id
    kw = dict(chunk_size=chunk_size, threads=threads)
    checks = [("gaussian", 1, first_moment), ("gaussian", 2, second_moment)]
    if p.L > (p.K + p.N + 1) / 2:
        checks.append(("algebraic", 1, first_moment))
    # second-order estimators need two extra moments for a finite standard error
    if p.L > (p.K + p.N + 7) / 2:
        checks += [("algebraic", 2, second_moment), ("algebraic", "variance", matrix_variance)]
    for side in ("time", "position"):
        for model, order, fn in checks:
            stream += 1
            est = estimate_moment_mc(p, model, order, side, count,
                                     RngState(rng.seed, stream), **kw)
            rows += _matrix_rows(f"{model}.{side}.order{order}", fn(p, model, side).matrix, est)
    if p.L > (p.K + p.N + 7) / 2:
        for which in ("d", "p", "m") if p.N > 1 else ("d",):
            stream += 1
            est = estimate_psi_mc(which, p.K, p.N, p.L, count, RngState(rng.seed, stream), **kw)
            ratio, se = psi_ratio(est, which, p.K, p.N, p.L)
            z = abs(ratio - 1.0) / se
            rows.append({"target": f"psi_{which}/closed", "closed_form": 1.0, "estimate": ratio,
                         "stderr": se, "z_score": z, "pass": z <= Z_LIMIT})
    J = 0.1 * np.eye(p.K) / max(float(np.linalg.norm(p.Sigma, 2)), 1e-300)
    stream += 1
    est = mc_generating_function(p, J, count, RngState(rng.seed, stream), "gaussian", **kw)
    closed = generating_function_gauss(p, J)
    z = abs(est.mean - closed) / est.stderr
    rows.append({"target": "gaussian.generating_function", "closed_form": closed,
                 "estimate": est.mean, "stderr": est.stderr, "z_score": z, "pass": z <= Z_LIMIT})
    return rows
