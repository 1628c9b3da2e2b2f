"""Closed-form first and second matrix moments, variances and the Gaussian
generating function.

Time-side moments are averages of powers of ``X X^T / N`` (K x K);
position-side moments of ``X^T X / K`` (N x N) follow by exchanging
``K <-> N`` and ``Sigma <-> Xi`` and are never derived separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .model import (
    FIRST_MOMENT_OFFSET,
    SECOND_MOMENT_OFFSET,
    ExistenceError,
    ModelParams,
    ParameterError,
    is_symmetric,
    require_existence,
)

Model = Literal["algebraic", "gaussian"]
Side = Literal["time", "position"]

_MODEL_ALIASES = {"algebraic": "algebraic", "alg": "algebraic", "a": "algebraic",
                  "gaussian": "gaussian", "gauss": "gaussian", "g": "gaussian"}

VARIANCE_RTOL = 1e-10


class DomainError(ParameterError):
    """The generating function argument is not positive definite."""


def normalize_model(model: str) -> str:
    try:
        return _MODEL_ALIASES[model.lower()]
    except KeyError:
        raise ParameterError(f"unknown model {model!r}; use 'algebraic' or 'gaussian'") from None


def normalize_side(side: str) -> str:
    if side not in ("time", "position"):
        raise ParameterError(f"unknown side {side!r}; use 'time' or 'position'")
    return side


@dataclass(frozen=True)
class MomentReport:
    order: int | str
    model: str
    side: str
    matrix: np.ndarray
    exists: bool
    params_echo: dict
    message: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "model": self.model,
            "side": self.side,
            "exists": self.exists,
            "matrix": self.matrix.tolist(),
            "message": self.message,
            "params": self.params_echo,
            **({"extra": self.extra} if self.extra else {}),
        }


@dataclass(frozen=True)
class SourceMatrix:
    """Real symmetric source matrix of the generating function."""

    J: np.ndarray

    def __post_init__(self):
        J = np.atleast_2d(np.array(self.J, dtype=float))
        if J.shape[0] != J.shape[1] or not is_symmetric(J):
            raise ParameterError("source matrix must be square and symmetric")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)


def _traces(p: ModelParams) -> tuple[float, float, float]:
    """(tr Xi / N, tr Xi^2 / N^2, tr^2 Xi / N^2)."""
    N = p.N
    tr = float(np.trace(p.Xi))
    tr2 = float(np.sum(p.Xi * p.Xi.T))
    return tr / N, tr2 / N**2, tr * tr / N**2


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _first_time(p: ModelParams, model: str) -> np.ndarray:
    t1, _, _ = _traces(p)
    if model == "gaussian":
        return t1 * p.Sigma.copy()
    q = 2.0 * p.L - 1.0 - (p.K + p.N)
    return p.M / q * t1 * p.Sigma


def _second_time(p: ModelParams, model: str) -> np.ndarray:
    _, s2, s11 = _traces(p)
    S = p.Sigma
    S2 = _sym(S @ S)
    trS = float(np.trace(S))
    if model == "gaussian":
        return (s2 + s11) * S2 + s2 * trS * S
    r = 2.0 * p.L - (p.K + p.N)
    pre = p.M**2 / ((r - 3.0) * (r - 1.0))
    c_sq = 2.0 * s2 + (r - 1.0) / r * (s11 - s2)
    c_tr = s2 + (s11 - s2) / r
    return pre * (c_sq * S2 + c_tr * trS * S)


def _variance_time(p: ModelParams, model: str) -> np.ndarray:
    _, s2, s11 = _traces(p)
    S = p.Sigma
    S2 = _sym(S @ S)
    trS = float(np.trace(S))
    if model == "gaussian":
        return s2 * (S2 + trS * S)
    r = 2.0 * p.L - (p.K + p.N)
    M2 = p.M**2
    c_sq = M2 * (r + 1.0) / ((r - 3.0) * (r - 1.0) * r) * (s2 + s11 / (r - 1.0))
    c_tr = M2 / ((r - 3.0) * r) * (s2 + s11 / (r - 1.0))
    return c_sq * S2 + c_tr * trS * S


def _dispatch(p: ModelParams, side: str) -> ModelParams:
    return p if side == "time" else p.swapped()


def _report(order, model, side, p, fn, offset, what) -> MomentReport:
    model = normalize_model(model)
    side = normalize_side(side)
    q = _dispatch(p, side)
    q.sigma_chol, q.xi_chol
    if model == "algebraic":
        try:
            require_existence(p.K, p.N, p.L, offset, what)
        except ExistenceError as exc:
            dim = q.K
            return MomentReport(order, model, side, np.full((dim, dim), np.nan), False,
                                p.summary(), message=exc.condition)
    matrix = _sym(fn(q, model))
    return MomentReport(order, model, side, matrix, True, p.summary())


def first_moment(p: ModelParams, model: str = "algebraic", side: str = "time") -> MomentReport:
    """Average of X X^T / N (time side) or X^T X / K (position side)."""
    return _report(1, model, side, p, _first_time, FIRST_MOMENT_OFFSET, "first moment")


def second_moment(p: ModelParams, model: str = "algebraic", side: str = "time") -> MomentReport:
    """Average of the squared sample covariance matrix."""
    return _report(2, model, side, p, _second_time, SECOND_MOMENT_OFFSET, "second moment")


def matrix_variance(p: ModelParams, model: str = "algebraic", side: str = "time") -> MomentReport:
    """Matrix variance <W^2> - <W>^2 of the sample covariance W.

    Evaluated from its own closed form and cross-checked against the
    difference of the moment formulas; the two must agree to 1e-10
    relative (Frobenius).
    """
    rep = _report("variance", model, side, p, _variance_time, SECOND_MOMENT_OFFSET,
                  "matrix variance")
    if not rep.exists:
        return rep
    q = _dispatch(p, rep.side)
    m1 = _sym(_first_time(q, rep.model))
    via_moments = _sym(_second_time(q, rep.model)) - _sym(m1 @ m1)
    scale = max(np.linalg.norm(rep.matrix), np.finfo(float).tiny)
    rel = float(np.linalg.norm(rep.matrix - via_moments) / scale)
    if rel > VARIANCE_RTOL:
        raise ArithmeticError(f"variance closed form disagrees with moments (rel {rel:.3g})")
    return MomentReport(rep.order, rep.model, rep.side, rep.matrix, True, rep.params_echo,
                        extra={"moments_path_rel_diff": rel})


def variance_from_moments(p: ModelParams, model: str = "algebraic",
                          side: str = "time") -> np.ndarray:
    m1 = first_moment(p, model, side).matrix
    return second_moment(p, model, side).matrix - _sym(m1 @ m1)


# --- Gaussian generating function -------------------------------------------

def _source(J) -> np.ndarray:
    return J.J if isinstance(J, SourceMatrix) else SourceMatrix(J).J


def _gf_factors(p: ModelParams, J: np.ndarray) -> np.ndarray:
    # eigenvalues of Xi (x) Sigma J are products theta_n * lambda_k with
    # lambda the spectrum of Sigma^{1/2} J Sigma^{1/2} (similar to Sigma J)
    A = p.sigma_chol
    lam = np.linalg.eigvalsh(_sym(A.T @ J @ A))
    theta = np.linalg.eigvalsh(p.Xi)
    return 1.0 + 2.0 * np.outer(theta, lam) / p.N


def log_generating_function_gauss(p: ModelParams, J, method: str = "dense") -> float:
    J = _source(J)
    if J.shape != (p.K, p.K):
        raise ParameterError(f"source matrix must be {p.K} x {p.K}")
    factors = _gf_factors(p, J)
    if np.any(factors <= 0):
        raise DomainError("1 + 2 Xi (x) Sigma J / N is not positive definite")
    if method == "eig":
        return -0.5 * float(np.sum(np.log(factors)))
    if method != "dense":
        raise ParameterError(f"unknown method {method!r}")
    big = np.eye(p.K * p.N) + 2.0 * np.kron(p.Xi, p.Sigma @ J) / p.N
    sign, logdet = np.linalg.slogdet(big)
    if sign <= 0:
        raise DomainError("1 + 2 Xi (x) Sigma J / N is not positive definite")
    return -0.5 * logdet


def generating_function_gauss(p: ModelParams, J, method: str = "dense") -> float:
    """Z_G(J) = <exp(-tr X X^T J / N)> in the Gaussian ensemble."""
    return float(np.exp(log_generating_function_gauss(p, J, method)))


def _sym_basis(K: int) -> list[tuple[int, int, np.ndarray]]:
    # directions along which the weighted gradient acts: the diagonal entry
    # J_ii, or (E_ij + E_ji) / 2 which carries the factor 1/2 off the diagonal
    basis = []
    for i in range(K):
        for j in range(i, K):
            E = np.zeros((K, K))
            E[i, j] = E[j, i] = 1.0 if i == j else 0.5
            basis.append((i, j, E))
    return basis


def _fd_derivatives(p: ModelParams, order: int, h: float, method: str) -> np.ndarray:
    K = p.K
    Z = lambda J: generating_function_gauss(p, J, method)  # noqa: E731
    basis = _sym_basis(K)
    grad = np.zeros((K, K))
    if order == 1:
        for i, j, E in basis:
            grad[i, j] = grad[j, i] = (Z(h * E) - Z(-h * E)) / (2.0 * h)
        return -grad
    hess = {}
    for a, (i, j, Ea) in enumerate(basis):
        for b, (k, l, Eb) in enumerate(basis[a:], start=a):
            val = (Z(h * (Ea + Eb)) - Z(h * (Ea - Eb)) - Z(h * (Eb - Ea))
                   + Z(-h * (Ea + Eb))) / (4.0 * h * h)
            hess[(i, j, k, l)] = hess[(k, l, i, j)] = val

    def D2(i, k, k2, j):
        return hess[(min(i, k), max(i, k), min(k2, j), max(k2, j))]

    out = np.zeros((K, K))
    for i in range(K):
        for j in range(K):
            out[i, j] = sum(D2(i, k, k, j) for k in range(K))
    return out


def default_step(p: ModelParams) -> float:
    # J carries inverse units of Sigma Xi, so the step shrinks with their scale
    scale = float(np.linalg.norm(p.Sigma, 2) * np.linalg.norm(p.Xi, 2))
    return 1e-3 / (1.0 + scale)


def moment_from_generating_fd(p: ModelParams, order: int, h: float | None = None,
                              richardson: bool = True, method: str = "dense") -> MomentReport:
    """Gaussian moment of the given order by central differences of Z_G at J = 0.

    With ``richardson`` (the default) the steps h and h/2 are combined to
    cancel the O(h^2) truncation term; plain central differences at the
    default step leave ~1e-6 absolute error on the second moment.
    """
    if order not in (1, 2):
        raise ParameterError("order must be 1 or 2")
    h = default_step(p) if h is None else float(h)
    est = _fd_derivatives(p, order, h, method)
    if richardson:
        half = _fd_derivatives(p, order, h / 2.0, method)
        est = (4.0 * half - est) / 3.0
    return MomentReport(order, "gaussian", "time", _sym(est), True, p.summary(),
                        extra={"h": h, "richardson": richardson})


# --- Gaussian limit -----------------------------------------------------------

def gaussian_limit_check(p0: ModelParams, L_grid) -> list[dict]:
    """Relative Frobenius distances between algebraic and Gaussian moments.

    For every L the shape parameter M is set to 2L - 1 - (K+N), which makes
    the first moments coincide exactly.
    """
    rows = []
    for L in L_grid:
        M = 2.0 * L - 1.0 - (p0.K + p0.N)
        p = p0.replace(L=float(L), M=M)
        row = {"L": float(L), "M": M}
        for name, fn in (("first", first_moment), ("second", second_moment),
                         ("variance", matrix_variance)):
            a = fn(p, "algebraic").matrix
            g = fn(p, "gaussian").matrix
            row[name] = float(np.linalg.norm(a - g) / np.linalg.norm(g))
        rows.append(row)
    return rows
