import math

import numpy as np
import pytest

from htwishart.model import ModelParams, ParameterError
from htwishart.moments import first_moment, second_moment
from htwishart.quadrature import aomoto_quad, ingham_siegel_quad, laguerre_quad, quad_scalar_case
from htwishart.special import AomotoParams, aomoto_closed, aomoto_laguerre_limit, ingham_siegel_closed

from oracles import student_t_moments


@pytest.mark.parametrize("L", [2.6, 3.0, 4.0, 10.0])
def test_scalar_quadrature_matches_closed_forms(L):
    p = ModelParams(1, 1, L, 2.5, [[1.5]], [[0.8]])
    x2, x4 = student_t_moments(2.5 * 1.5 * 0.8, L)
    assert quad_scalar_case(p, 1) == pytest.approx(x2, rel=1e-8)
    assert quad_scalar_case(p, 2) == pytest.approx(x4, rel=1e-8)
    assert quad_scalar_case(p, 0) == pytest.approx(1.0, rel=1e-10)
    assert quad_scalar_case(p, 1) == pytest.approx(first_moment(p).matrix[0, 0], rel=1e-8)
    assert quad_scalar_case(p, 2) == pytest.approx(second_moment(p).matrix[0, 0], rel=1e-8)


def test_scalar_quadrature_rejects_matrices():
    with pytest.raises(ParameterError):
        quad_scalar_case(ModelParams.identity(2, 1, 5.0, 1.0), 1)


@pytest.mark.parametrize("N", [1, 2])
@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.5, 1.0), (1.0, 2.5), (2.5, 2.5)])
def test_aomoto_quadrature(N, a, b):
    for m in range(N + 1):
        ap = AomotoParams(a, b, 0.5, N, m)
        assert aomoto_quad(ap) == pytest.approx(math.exp(aomoto_closed(ap)), rel=1e-8)


@pytest.mark.parametrize("a", [1.0, 2.5])
def test_laguerre_quadrature(a):
    for m in range(3):
        assert laguerre_quad(a, 2, m) == pytest.approx(math.exp(aomoto_laguerre_limit(a, 2, m)), rel=1e-8)


def test_ingham_siegel_quadrature():
    assert ingham_siegel_quad(3.0, [[2.0]]) == pytest.approx(0.25, rel=1e-10)
    assert ingham_siegel_quad(2.0, np.eye(2)) == pytest.approx(math.exp(ingham_siegel_closed(2.0, np.eye(2))),
                                                               rel=1e-6)


def test_scalar_quadrature_examples():
    assert quad_scalar_case(ModelParams(1, 1, 3.0, 3.0, [[5.0]], [[2.0]]), 1) == pytest.approx(10.0, rel=1e-8)
    assert quad_scalar_case(ModelParams(1, 1, 4.0, 5.0, [[1.0]], [[1.0]]), 2) == pytest.approx(5.0, rel=1e-8)
