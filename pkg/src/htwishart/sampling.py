"""Exact samplers for the Gaussian and algebraic ensembles.

The algebraic ensemble is a scale mixture of Gaussians: with

    S ~ Wishart(dim N, dof 2L - K, scale 1_N / 2)

the conditional law of X is Gaussian with column-stacked covariance
``(M/2) Xi^{1/2} S^{-1} Xi^{1/2} (x) Sigma``, and integrating S out
reproduces the determinantal density exactly. Writing S = T T^T / 2 with
the Bartlett factor T gives the draw

    X = sqrt(M) chol(Sigma) Z T^{-1} Xi^{1/2},   Z_kn iid N(0, 1).

Random numbers come from numpy's counter-based Philox generator keyed by
``(seed, stream_id)``. A run of ``count`` draws is cut into chunks of
``chunk_size``; chunk ``i`` uses the key's generator jumped ``i`` times,
so results depend only on (seed, stream_id, count, chunk_size) and never
on how chunks are spread over threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

from .kernels import c64, get_backend
from .model import (
    DENSITY_OFFSET,
    DataMatrix,
    DimensionError,
    ExistenceError,
    ModelParams,
    ParameterError,
    cholesky_spd,
    require_existence,
)
from .moments import normalize_model

GENERATOR_VERSION = "philox4x64-numpy-jumped-chunks-v1"
DEFAULT_CHUNK = 10_000
COND_LIMIT = 1e12
MAX_RETRIES = 100

_U64 = (1 << 64) - 1
T = TypeVar("T")


@dataclass(frozen=True)
class RngState:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v <= _U64:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {v}")
            object.__setattr__(self, name, int(v))

    def generator(self, chunk: int = 0) -> np.random.Generator:
        bitgen = np.random.Philox(key=self.seed | (self.stream_id << 64))
        if chunk:
            bitgen = bitgen.jumped(chunk)
        return np.random.Generator(bitgen)


@dataclass(frozen=True)
class WishartSpec:
    dim: int
    dof: float
    scale: np.ndarray

    def __post_init__(self):
        scale = np.atleast_2d(np.array(self.scale, dtype=float))
        if scale.shape != (self.dim, self.dim):
            raise DimensionError(f"scale has shape {scale.shape}, expected ({self.dim}, {self.dim})")
        if not self.dof > self.dim - 1:
            raise ExistenceError(f"Wishart dof must exceed dim - 1 = {self.dim - 1}, got {self.dof}",
                                 "dof > dim - 1")
        cholesky_spd(scale, "scale")
        scale.setflags(write=False)
        object.__setattr__(self, "scale", scale)


def chunk_sizes(count: int, chunk_size: int = DEFAULT_CHUNK) -> list[int]:
    if count < 1 or chunk_size < 1:
        raise ParameterError("count and chunk_size must be positive")
    full, rest = divmod(count, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[np.random.Generator, int], T], count: int, rng: RngState,
               chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> list[T]:
    """Apply ``fn(generator, n)`` to every chunk; results come back in chunk order."""
    sizes = chunk_sizes(count, chunk_size)
    jobs = [(rng.generator(i), n) for i, n in enumerate(sizes)]
    if threads <= 1 or len(jobs) == 1:
        return [fn(g, n) for g, n in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def bartlett_factors(gen: np.random.Generator, dim: int, dof: float, n: int,
                     backend=None) -> np.ndarray:
    """n lower-triangular factors T with T T^T ~ Wishart(dim, dof, identity)."""
    kern = backend or get_backend()
    shapes = (dof - np.arange(dim)) / 2.0
    chi2 = 2.0 * gen.standard_gamma(shapes, size=(n, dim))
    normals = gen.standard_normal((n, dim * (dim - 1) // 2))
    return kern.bartlett_factors(c64(chi2), c64(normals))


def _condition(T: np.ndarray) -> np.ndarray:
    if T.shape[1] == 1:
        return np.ones(T.shape[0])
    s = np.linalg.svd(T, compute_uv=False)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return (s[:, 0] / s[:, -1]) ** 2


def _ill_conditioned(T: np.ndarray, kern) -> np.ndarray:
    # the cheap Frobenius bound clears almost every draw; only the rest need an SVD
    # written as "not <=" so that nan (a zero pivot) counts as ill-conditioned
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        suspect = np.flatnonzero(~(kern.condition_bound(T) <= COND_LIMIT))
    if suspect.size == 0:
        return suspect
    return suspect[~(_condition(T[suspect]) <= COND_LIMIT)]


def well_conditioned_factors(gen, dim, dof, n, backend=None) -> tuple[np.ndarray, int]:
    """Bartlett factors whose S = T T^T / 2 has condition number <= 1e12.

    Offending draws are replaced from the same generator, at most 100
    times each; the total number of replacements is returned.
    """
    kern = backend or get_backend()
    T = bartlett_factors(gen, dim, dof, n, kern)
    retries = 0
    bad = _ill_conditioned(T, kern)
    rounds = 0
    while bad.size:
        rounds += 1
        if rounds > MAX_RETRIES:
            raise ArithmeticError("Wishart draws stayed ill-conditioned after 100 retries")
        T[bad] = bartlett_factors(gen, dim, dof, bad.size, kern)
        retries += bad.size
        bad = bad[_ill_conditioned(np.ascontiguousarray(T[bad]), kern)]
    return T, retries


def sample_wishart_batch(spec: WishartSpec, count: int, rng: RngState,
                         chunk_size: int = DEFAULT_CHUNK) -> np.ndarray:
    A = np.linalg.cholesky(spec.scale)

    def one(gen, n):
        T = bartlett_factors(gen, spec.dim, spec.dof, n)
        AT = A @ T
        return AT @ np.swapaxes(AT, 1, 2)

    return np.concatenate(map_chunks(one, count, rng, chunk_size))


def sample_wishart(spec: WishartSpec, rng: RngState) -> np.ndarray:
    return sample_wishart_batch(spec, 1, rng)[0]


@dataclass(frozen=True)
class DrawBatch:
    X: np.ndarray
    model: str
    retries: int = 0

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i) -> DataMatrix:
        return DataMatrix(self.X[i])


def gauss_chunk(p: ModelParams, gen: np.random.Generator, n: int, backend=None):
    kern = backend or get_backend()
    Z = gen.standard_normal((n, p.K, p.N))
    return kern.assemble_gauss(c64(Z), c64(p.sigma_chol), c64(p.xi_chol)), 0


def alg_chunk(p: ModelParams, gen: np.random.Generator, n: int, backend=None):
    kern = backend or get_backend()
    require_existence(p.K, p.N, p.L, DENSITY_OFFSET, "algebraic sampler")
    T, retries = well_conditioned_factors(gen, p.N, 2.0 * p.L - p.K, n, kern)
    Z = gen.standard_normal((n, p.K, p.N))
    X = kern.assemble_alg(T, c64(Z), c64(p.sigma_chol), c64(p.xi_sqrt), math.sqrt(p.M))
    return X, retries


def chunk_sampler(p: ModelParams, model: str, backend=None):
    model = normalize_model(model)
    p.sigma_chol, p.xi_chol
    if model == "algebraic":
        require_existence(p.K, p.N, p.L, DENSITY_OFFSET, "algebraic sampler")
        p.xi_sqrt
        return lambda gen, n: alg_chunk(p, gen, n, backend)
    return lambda gen, n: gauss_chunk(p, gen, n, backend)


def draw_batch(p: ModelParams, model: str, count: int, rng: RngState,
               chunk_size: int = DEFAULT_CHUNK, threads: int = 1, backend=None) -> DrawBatch:
    parts = map_chunks(chunk_sampler(p, model, backend), count, rng, chunk_size, threads)
    X = np.concatenate([x for x, _ in parts])
    return DrawBatch(X, normalize_model(model), sum(r for _, r in parts))


def sample_gauss(p: ModelParams, rng: RngState) -> DataMatrix:
    """One draw with column-stacked covariance Xi (x) Sigma."""
    return draw_batch(p, "gaussian", 1, rng)[0]


def sample_alg(p: ModelParams, rng: RngState) -> DataMatrix:
    """One exact draw from the determinantal density via the Wishart mixture."""
    return draw_batch(p, "algebraic", 1, rng)[0]


def mixture_exists(K: int, N: int, L: float) -> bool:
    """The Wishart mixing law needs dof 2L - K > N - 1."""
    return 2.0 * L - K > N - 1
