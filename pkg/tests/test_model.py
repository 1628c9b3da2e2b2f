import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from htwishart.model import (
    DataMatrix,
    DimensionError,
    ExistenceError,
    ModelParams,
    NotPositiveDefiniteError,
    ThetaSpectrum,
    log_density_alg,
    log_density_gauss,
    log_normalization,
    require_existence,
    threshold,
    validate_params,
    FIRST_MOMENT_OFFSET,
)

from oracles import random_spd


def test_shapes_checked():
    with pytest.raises(DimensionError):
        ModelParams(2, 3, 5, 1, np.eye(3), np.eye(3))
    with pytest.raises(DimensionError):
        ModelParams(0, 3, 5, 1, np.eye(0), np.eye(3))
    with pytest.raises(DimensionError):
        ModelParams(1.5, 3, 5, 1, np.eye(1), np.eye(3))


def test_arrays_are_read_only():
    p = ModelParams.identity(2, 2, 5, 1)
    with pytest.raises(ValueError):
        p.Sigma[0, 0] = 3.0


def test_swapped_exchanges_roles():
    rng = np.random.default_rng(0)
    p = ModelParams(2, 3, 6, 1.5, random_spd(rng, 2), random_spd(rng, 3))
    q = p.swapped()
    assert (q.K, q.N) == (3, 2)
    assert np.array_equal(q.Sigma, p.Xi) and np.array_equal(q.Xi, p.Sigma)


def test_not_positive_definite_reported():
    p = ModelParams(2, 2, 5, 1, np.diag([1.0, -1.0]), np.eye(2))
    rep = validate_params(p)
    assert not rep.ok
    with pytest.raises(NotPositiveDefiniteError):
        p.sigma_chol


@pytest.mark.parametrize("K,N", [(1, 1), (2, 3), (5, 4)])
def test_thresholds_are_strict(K, N):
    edge = (K + N - 1) / 2
    rep = validate_params(ModelParams.identity(K, N, edge, 1))
    assert not rep.density_exists
    rep = validate_params(ModelParams.identity(K, N, edge + 1e-9, 1))
    assert rep.density_exists and not rep.first_moment_exists
    rep = validate_params(ModelParams.identity(K, N, (K + N + 3) / 2 + 1e-9, 1))
    assert rep.second_moment_exists


def test_existence_error_names_condition():
    with pytest.raises(ExistenceError) as info:
        require_existence(2, 3, 3.0, FIRST_MOMENT_OFFSET, "first moment")
    assert "(K+N+1)/2" in info.value.condition
    assert threshold(2, 3, FIRST_MOMENT_OFFSET) == 3.0


def test_data_matrix_rejects_nan():
    with pytest.raises(Exception):
        DataMatrix([[1.0, np.nan]])
    X = DataMatrix([[1.0, 2.0]])
    with pytest.raises(DimensionError):
        X.check(ModelParams.identity(2, 2, 5, 1))


def test_theta_spectrum_sorted():
    p = ModelParams(1, 3, 5, 1, np.eye(1), np.diag([0.5, 2.0, 1.0]))
    assert np.allclose(ThetaSpectrum.of(p).values, [2.0, 1.0, 0.5])


def test_scalar_density_normalized():
    p = ModelParams(1, 1, 2.3, 1.7, [[0.9]], [[1.4]])
    val, _ = integrate.quad(lambda x: math.exp(log_density_alg(p, [[x]])), -np.inf, np.inf,
                            epsabs=1e-13, epsrel=1e-11, limit=200)
    assert val == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("K,N,L", [(1, 3, 4.0), (1, 2, 2.2), (3, 1, 3.5), (4, 1, 5.1)])
def test_density_is_multivariate_t_when_one_side_is_a_vector(K, N, L):
    rng = np.random.default_rng(K * 10 + N)
    S, X = random_spd(rng, K), random_spd(rng, N)
    M = 1.3
    p = ModelParams(K, N, L, M, S, X)
    D = K if N == 1 else N
    nu = 2 * L - D
    shape = M * (S[0, 0] * X if K == 1 else X[0, 0] * S) / nu
    dist = stats.multivariate_t(loc=np.zeros(D), shape=shape, df=nu)
    for _ in range(5):
        Y = rng.normal(size=(K, N)) * 2
        assert log_density_alg(p, Y) == pytest.approx(dist.logpdf(Y.ravel()), rel=1e-11, abs=1e-11)


def test_gauss_density_matches_kronecker_normal():
    rng = np.random.default_rng(3)
    S, X = random_spd(rng, 3), random_spd(rng, 2)
    p = ModelParams(3, 2, np.inf, 1.0, S, X)
    dist = stats.multivariate_normal(np.zeros(6), np.kron(X, S))
    Y = rng.normal(size=(3, 2))
    assert log_density_gauss(p, Y) == pytest.approx(dist.logpdf(Y.T.ravel()), rel=1e-12)


def test_normalization_closed_form_scalar():
    # scalar case: Gamma(L) / (Gamma(L - 1/2) sqrt(pi a))
    p = ModelParams(1, 1, 3.0, 2.0, [[1.5]], [[0.5]])
    a = 2.0 * 1.5 * 0.5
    expect = math.lgamma(3.0) - math.lgamma(2.5) - 0.5 * math.log(math.pi * a)
    assert log_normalization(p) == pytest.approx(expect, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(0.1, 10.0), seed=st.integers(0, 2**32 - 1))
def test_density_gauge_invariant(c, seed):
    rng = np.random.default_rng(seed)
    S, X = random_spd(rng, 2), random_spd(rng, 3)
    p = ModelParams(2, 3, 4.5, 2.0, S, X)
    q = p.replace(Sigma=c * S, Xi=X / c)
    Y = rng.normal(size=(2, 3))
    assert log_density_alg(p, Y) == pytest.approx(log_density_alg(q, Y), abs=1e-10)
    assert log_density_gauss(p, Y) == pytest.approx(log_density_gauss(q, Y), abs=1e-10)


def test_density_rejects_nonexistent_law():
    p = ModelParams.identity(2, 2, 1.5, 1)
    with pytest.raises(ExistenceError):
        log_density_alg(p, np.zeros((2, 2)))
