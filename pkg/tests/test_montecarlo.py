import math

import numpy as np
import pytest

from htwishart.model import ExistenceError, ModelParams, ParameterError
from htwishart.moments import first_moment, matrix_variance, second_moment
from htwishart.montecarlo import (
    _Stats,
    estimate_moment_mc,
    estimate_psi_mc,
    mc_generating_function,
    mc_generating_function_alg,
    pairwise_merge,
    psi_ratio,
    verification_table,
)
from htwishart.moments import generating_function_gauss
from htwishart.sampling import RngState
from htwishart.special import log_psi_difference

from oracles import random_spd

SEED = 20240601


def test_merge_matches_direct_statistics():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(1000, 2, 2))
    parts = [_Stats.of(v[i:i + 137]) for i in range(0, 1000, 137)]
    merged = pairwise_merge(parts)
    assert merged.n == 1000
    assert np.allclose(merged.mean, v.mean(axis=0), rtol=1e-13, atol=1e-15)
    assert np.allclose(merged.m2, ((v - v.mean(axis=0)) ** 2).sum(axis=0), rtol=1e-12)


def test_estimate_identical_across_thread_counts():
    p = ModelParams(2, 2, 6.0, 1.0, random_spd(np.random.default_rng(1), 2), np.eye(2))
    a = estimate_moment_mc(p, "alg", 1, "time", 5000, RngState(SEED), chunk_size=700, threads=1)
    b = estimate_moment_mc(p, "alg", 1, "time", 5000, RngState(SEED), chunk_size=700, threads=3)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr)
    assert a.count == 5000 and a.seed == SEED


@pytest.mark.parametrize("side", ["time", "position"])
def test_mc_moments_agree_with_closed_forms(side):
    rng = np.random.default_rng(2)
    p = ModelParams(2, 3, 9.0, 2.0, random_spd(rng, 2), random_spd(rng, 3))
    for model in ("alg", "gauss"):
        for order, fn in ((1, first_moment), (2, second_moment), ("variance", matrix_variance)):
            est = estimate_moment_mc(p, model, order, side, 40_000, RngState(SEED, 7))
            z = est.z_scores(fn(p, model, side).matrix)
            assert z.max() < 4.0, (model, order, z)


def test_mc_checks_existence():
    p = ModelParams.identity(2, 2, 3.2, 1.0)
    with pytest.raises(ExistenceError):
        estimate_moment_mc(p, "alg", 2, "time", 100, RngState(1))
    with pytest.raises(ParameterError):
        estimate_moment_mc(p, "alg", 3, "time", 100, RngState(1))
    with pytest.raises(ParameterError):
        estimate_moment_mc(p, "alg", 1, "time", 1, RngState(1))


@pytest.mark.parametrize("K,N,L", [(2, 2, 9.0), (1, 3, 10.0)])
def test_psi_mc_ratios(K, N, L):
    for which in ("d", "p", "m"):
        est = estimate_psi_mc(which, K, N, L, 40_000, RngState(SEED, 3))
        ratio, se = psi_ratio(est, which, K, N, L)
        assert abs(ratio - 1.0) < 4 * se


def test_psi_mc_arguments():
    with pytest.raises(ParameterError):
        estimate_psi_mc("p", 1, 1, 6.0, 100, RngState(1))
    with pytest.raises(ParameterError):
        estimate_psi_mc("x", 1, 2, 6.0, 100, RngState(1))


def test_generating_function_at_zero_is_exactly_one():
    p = ModelParams.identity(2, 3, 4.0, 1.0)
    est = mc_generating_function_alg(p, np.zeros((2, 2)), 1000, RngState(1))
    assert est.mean == 1.0 and est.stderr == 0.0


def test_gaussian_generating_function_mc():
    rng = np.random.default_rng(4)
    p = ModelParams(2, 2, np.inf, 1.0, random_spd(rng, 2), random_spd(rng, 2))
    J = 0.3 * random_spd(rng, 2)
    est = mc_generating_function(p, J, 40_000, RngState(SEED), "gauss")
    assert abs(est.mean - generating_function_gauss(p, J)) < 4 * est.stderr


def test_verification_table_passes():
    p = ModelParams(2, 2, 10.0, 5.0, random_spd(np.random.default_rng(5), 2), np.eye(2))
    rows = verification_table(p, 20_000, RngState(SEED))
    targets = {r["target"].split("[")[0] for r in rows}
    assert "algebraic.time.order2" in targets and "psi_m/closed" in targets
    assert all(r["pass"] for r in rows), [r for r in rows if not r["pass"]]


def test_to_dict_fields():
    p = ModelParams.identity(1, 1, 4.0, 1.0)
    d = estimate_moment_mc(p, "gauss", 1, "time", 100, RngState(2)).to_dict()
    assert set(d) >= {"mean", "stderr", "count", "seed", "wallclock_s"}


def test_scalar_examples():
    est = estimate_moment_mc(ModelParams.identity(1, 1, np.inf, 1.0), "gauss", 2, "time", 100_000,
                             RngState(SEED, 20))
    assert abs(est.mean[0, 0] - 3.0) < 3 * est.stderr[0, 0]
    psi = estimate_psi_mc("d", 1, 1, 4.0, 100_000, RngState(SEED, 21))
    assert abs(psi.mean * math.exp(psi.log_scale) - math.gamma(1.5)) < 3 * psi.stderr * math.exp(psi.log_scale)


def test_psi_relations_and_difference_mc():
    K, N, L = 2, 2, 5.0
    r = 2 * L - (K + N)
    ests = {w: estimate_psi_mc(w, K, N, L, 100_000, RngState(SEED, 22)) for w in "dpm"}
    # same stream for all three: the ratios use common draws
    d, p_, m = (ests[w].mean for w in "dpm")
    sd, sp, sm = (ests[w].stderr for w in "dpm")
    assert abs(p_ / d - (N - 1) * (r - 2) / r) < 3 * (p_ / d) * math.hypot(sp / p_, sd / d)
    assert abs(m / d - (N - 1) / r) < 3 * (m / d) * math.hypot(sm / m, sd / d)
    target = math.exp(log_psi_difference(K, N, L) - ests["p"].log_scale)
    assert abs((p_ - m) - target) < 3 * math.hypot(sp, sm)


def test_generating_function_taylor():
    p = ModelParams(2, 3, 9.0, 2.0, random_spd(np.random.default_rng(23), 2), np.eye(3))
    J = np.array([[1.0, 0.3], [0.3, 0.5]])
    eps = 1e-3
    est = mc_generating_function_alg(p, eps * J, 100_000, RngState(SEED, 23))
    slope = (1.0 - est.mean) / eps
    closed = float(np.trace(first_moment(p).matrix @ J))
    assert abs(slope - closed) < 3 * est.stderr / eps + 10 * eps * closed**2


def test_stderr_scales_with_count():
    p = ModelParams.identity(2, 2, np.inf, 1.0)
    small = estimate_moment_mc(p, "gauss", 1, "time", 10_000, RngState(SEED, 24))
    large = estimate_moment_mc(p, "gauss", 1, "time", 1_000_000, RngState(SEED, 25))
    ratio = small.stderr / large.stderr
    assert np.all(np.abs(ratio / 10.0 - 1.0) < 0.2)
