"""Quadrature rules against closed-form monomial integrals."""

from itertools import product
from math import factorial, prod

import numpy as np
import pytest

from ncpoly.quadrature import simplex_gauss_rule, tensor_gauss_rule


def cube_monomial_integral(powers):
    """Exact integral of prod x_i^p_i over [-1,1]^d."""
    return prod(0.0 if p % 2 else 2.0 / (p + 1) for p in powers)


def simplex_monomial_integral(powers):
    """Exact integral of prod x_i^p_i over the unit simplex."""
    return prod(factorial(p) for p in powers) / factorial(sum(powers) + len(powers))


def test_midpoint_rule_1d():
    rule = tensor_gauss_rule(1, 1)
    assert rule.points.shape == (1, 1)
    assert rule.points[0, 0] == pytest.approx(0.0, abs=1e-15)
    assert rule.weights[0] == pytest.approx(2.0)


def test_two_point_rule_2d():
    rule = tensor_gauss_rule(2, 2)
    assert rule.n_points == 4
    assert np.allclose(np.abs(rule.points), 1.0 / np.sqrt(3.0), atol=1e-15)
    assert np.allclose(rule.weights, 1.0, atol=1e-15)


def test_cube_weights_sum_to_volume():
    for dim in (2, 3, 4, 5):
        rule = tensor_gauss_rule(dim, 3)
        assert rule.weights.sum() == pytest.approx(2.0 ** dim, rel=1e-14)
        assert np.all(rule.weights > 0.0)


def test_quadratic_monomial_3d():
    rule = tensor_gauss_rule(3, 3)
    approx = (rule.weights * np.prod(rule.points ** 2, axis=1)).sum()
    assert approx == pytest.approx((2.0 / 3.0) ** 3, abs=1e-14)


@pytest.mark.parametrize("dim,k", [(2, 1), (2, 3), (3, 2), (4, 2)])
def test_cube_monomial_exactness(dim, k):
    rule = tensor_gauss_rule(dim, k)
    for powers in product(range(2 * k), repeat=dim):
        approx = (rule.weights * np.prod(rule.points ** np.array(powers), axis=1)).sum()
        assert approx == pytest.approx(cube_monomial_integral(powers), abs=1e-13)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_simplex_volume(dim):
    rule = simplex_gauss_rule(dim, 2)
    assert rule.weights.sum() == pytest.approx(1.0 / factorial(dim), rel=1e-13)
    assert np.all(rule.weights > 0.0)
    # all points strictly inside the simplex
    assert np.all(rule.points > 0.0)
    assert np.all(rule.points.sum(axis=1) < 1.0)


@pytest.mark.parametrize("dim,degree", [(2, 3), (3, 4), (4, 3)])
def test_simplex_monomial_exactness(dim, degree):
    rule = simplex_gauss_rule(dim, degree)
    for powers in product(range(degree + 1), repeat=dim):
        if sum(powers) > degree:
            continue
        approx = (rule.weights * np.prod(rule.points ** np.array(powers), axis=1)).sum()
        assert approx == pytest.approx(simplex_monomial_integral(powers), rel=1e-12)


def test_bad_arguments():
    with pytest.raises(ValueError):
        tensor_gauss_rule(0, 2)
    with pytest.raises(ValueError):
        tensor_gauss_rule(2, 0)
    with pytest.raises(ValueError):
        simplex_gauss_rule(2, -1)
