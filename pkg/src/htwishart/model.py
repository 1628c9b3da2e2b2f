"""Parameters, validation and log-densities of the algebraic and Gaussian ensembles.

The algebraic ensemble draws a real K x N data matrix X from

    w_A(X) = alpha / det^L(1_N + Xi^{-1/2} X^T Sigma^{-1} X Xi^{-1/2} / M)

and converges to the doubly correlated Gaussian (Wishart) ensemble

    w_G(X) = exp(-tr(Xi^{-1} X^T Sigma^{-1} X) / 2) / sqrt(det(2 pi Xi (x) Sigma))

when L, M -> infinity with M / L -> 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

SYMMETRY_RTOL = 1e-12


class ParameterError(ValueError):
    """Base class for invalid model input."""


class DimensionError(ParameterError):
    """Matrix shapes do not match the declared dimensions."""


class NotPositiveDefiniteError(ParameterError):
    """A matrix that must be symmetric positive definite is not."""


class ExistenceError(ParameterError):
    """A shape parameter sits at or beyond an existence threshold.

    ``condition`` carries a human readable statement of the violated bound.
    """

    def __init__(self, message: str, condition: str = ""):
        super().__init__(message)
        self.condition = condition or message


def _as_square(value, dim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.shape != (dim, dim):
        raise DimensionError(f"{name} has shape {arr.shape}, expected ({dim}, {dim})")
    arr.setflags(write=False)
    return arr


def is_symmetric(a: np.ndarray, rtol: float = SYMMETRY_RTOL) -> bool:
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
    return bool(np.max(np.abs(a - a.T)) <= rtol * scale)


def cholesky_spd(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor; raises if ``a`` is not symmetric positive definite."""
    if not is_symmetric(a):
        raise NotPositiveDefiniteError(f"{name} is not symmetric")
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from exc


def spd_sqrt(a: np.ndarray) -> np.ndarray:
    """Unique symmetric positive definite square root."""
    w, v = np.linalg.eigh(a)
    root = (v * np.sqrt(w)) @ v.T
    return 0.5 * (root + root.T)


def spd_inv_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    root = (v / np.sqrt(w)) @ v.T
    return 0.5 * (root + root.T)


def logdet_spd(a: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(np.linalg.cholesky(a)))))


# existence thresholds: L must strictly exceed (K + N + offset) / 2
DENSITY_OFFSET = -1
FIRST_MOMENT_OFFSET = 1
SECOND_MOMENT_OFFSET = 3


def threshold(K: int, N: int, offset: int) -> float:
    return (K + N + offset) / 2.0


def require_existence(K: int, N: int, L: float, offset: int, what: str) -> None:
    bound = threshold(K, N, offset)
    if not L > bound:
        sign = "+" if offset >= 0 else "-"
        condition = f"{what} requires L > (K+N{sign}{abs(offset)})/2 = {bound:g}"
        raise ExistenceError(f"{condition}; got L={L:g} (K={K}, N={N})", condition)


@dataclass(frozen=True)
class ModelParams:
    """Dimensions, shape parameters and correlation matrices of the model.

    ``Sigma`` (K x K) correlates the rows (time series), ``Xi`` (N x N) the
    columns (position series). Construction checks shapes only; positive
    definiteness and the existence conditions are reported by
    :func:`validate_params` and enforced by the operations that need them.
    """

    K: int
    N: int
    L: float
    M: float
    Sigma: np.ndarray = field(repr=False)
    Xi: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.K) != self.K or int(self.N) != self.N or self.K < 1 or self.N < 1:
            raise DimensionError(f"K and N must be positive integers, got K={self.K}, N={self.N}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "M", float(self.M))
        object.__setattr__(self, "Sigma", _as_square(self.Sigma, self.K, "Sigma"))
        object.__setattr__(self, "Xi", _as_square(self.Xi, self.N, "Xi"))

    @classmethod
    def identity(cls, K: int, N: int, L: float, M: float) -> "ModelParams":
        return cls(K, N, L, M, np.eye(K), np.eye(N))

    def swapped(self) -> "ModelParams":
        """Exchange the roles of rows and columns (K <-> N, Sigma <-> Xi)."""
        return ModelParams(self.N, self.K, self.L, self.M, self.Xi, self.Sigma)

    def replace(self, **changes) -> "ModelParams":
        fields = dict(K=self.K, N=self.N, L=self.L, M=self.M, Sigma=self.Sigma, Xi=self.Xi)
        fields.update(changes)
        return ModelParams(**fields)

    def summary(self) -> dict:
        return {
            "K": self.K,
            "N": self.N,
            "L": self.L,
            "M": self.M,
            "tr_sigma": float(np.trace(self.Sigma)),
            "tr_xi": float(np.trace(self.Xi)),
            "tr_xi2": float(np.trace(self.Xi @ self.Xi)),
        }

    @cached_property
    def sigma_chol(self) -> np.ndarray:
        return cholesky_spd(self.Sigma, "Sigma")

    @cached_property
    def xi_chol(self) -> np.ndarray:
        return cholesky_spd(self.Xi, "Xi")

    @cached_property
    def xi_sqrt(self) -> np.ndarray:
        self.xi_chol
        return spd_sqrt(self.Xi)

    @cached_property
    def xi_inv_sqrt(self) -> np.ndarray:
        self.xi_chol
        return spd_inv_sqrt(self.Xi)

    @cached_property
    def logdet_sigma(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.sigma_chol))))

    @cached_property
    def logdet_xi(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.xi_chol))))


@dataclass(frozen=True)
class DataMatrix:
    """One K x N draw of the ensemble."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2:
            raise DimensionError(f"data matrix must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("data matrix has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def check(self, p: ModelParams) -> np.ndarray:
        if self.entries.shape != (p.K, p.N):
            raise DimensionError(f"data matrix has shape {self.entries.shape}, "
                                 f"model expects ({p.K}, {p.N})")
        return self.entries


@dataclass(frozen=True)
class ThetaSpectrum:
    """Eigenvalues of Xi in descending order."""

    values: tuple[float, ...]

    def __post_init__(self):
        if any(v <= 0 for v in self.values):
            raise NotPositiveDefiniteError("Xi has non-positive eigenvalues")

    @classmethod
    def of(cls, p: ModelParams) -> "ThetaSpectrum":
        p.xi_chol
        w = np.linalg.eigvalsh(p.Xi)[::-1]
        return cls(tuple(float(v) for v in w))


@dataclass(frozen=True)
class ValidationReport:
    density_exists: bool
    first_moment_exists: bool
    second_moment_exists: bool
    messages: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.density_exists and not any("positive definite" in m or "symmetric" in m
                                               for m in self.messages)


def validate_params(p: ModelParams) -> ValidationReport:
    """Evaluate the three existence thresholds and the SPD requirements."""
    messages = []
    for name, mat in (("Sigma", p.Sigma), ("Xi", p.Xi)):
        try:
            cholesky_spd(mat, name)
        except NotPositiveDefiniteError as exc:
            messages.append(str(exc))
    flags = []
    for offset, what in ((DENSITY_OFFSET, "density"),
                         (FIRST_MOMENT_OFFSET, "first moment"),
                         (SECOND_MOMENT_OFFSET, "second moment")):
        try:
            require_existence(p.K, p.N, p.L, offset, what)
            flags.append(True)
        except ExistenceError as exc:
            messages.append(exc.condition)
            flags.append(False)
    return ValidationReport(*flags, messages=tuple(messages))


def log_normalization(p: ModelParams) -> float:
    """Natural log of the normalization constant of the algebraic density."""
    require_existence(p.K, p.N, p.L, DENSITY_OFFSET, "density")
    K, N, L = p.K, p.N, p.L
    n = np.arange(1, N + 1)
    log_det = K * N * math.log(2.0 * math.pi) + K * p.logdet_xi + N * p.logdet_sigma
    log_gamma = float(np.sum(gammaln(L - (n - 1) / 2.0) - gammaln(L - (K + n - 1) / 2.0)))
    return -0.5 * log_det + 0.5 * K * N * math.log(2.0 / p.M) + log_gamma


def _whitened(p: ModelParams, X: np.ndarray) -> np.ndarray:
    # Sigma^{-1/2} X Xi^{-1/2} with the Cholesky factor on the left; Y^T Y is
    # the symmetric argument Xi^{-1/2} X^T Sigma^{-1} X Xi^{-1/2}.
    from scipy.linalg import solve_triangular

    left = solve_triangular(p.sigma_chol, X, lower=True)
    return left @ p.xi_inv_sqrt


def log_density_alg(p: ModelParams, X: DataMatrix | np.ndarray) -> float:
    if not isinstance(X, DataMatrix):
        X = DataMatrix(X)
    x = X.check(p)
    y = _whitened(p, x)
    arg = np.eye(p.N) + (y.T @ y) / p.M
    return log_normalization(p) - p.L * logdet_spd(0.5 * (arg + arg.T))


def log_density_gauss(p: ModelParams, X: DataMatrix | np.ndarray) -> float:
    if not isinstance(X, DataMatrix):
        X = DataMatrix(X)
    x = X.check(p)
    y = _whitened(p, x)
    log_det = p.K * p.N * math.log(2.0 * math.pi) + p.K * p.logdet_xi + p.N * p.logdet_sigma
    return -0.5 * log_det - 0.5 * float(np.sum(y * y))
