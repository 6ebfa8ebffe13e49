"""
Test f-divergences, the per-unit Hellinger divergence and its weight gradient
"""
import math

import numpy as np
import pytest

from src.numerics import finite_diff_grad, relative_error, sigmoid
from src.regularization import (
    HELLINGER,
    KULLBACK_LEIBLER,
    bhattacharyya,
    bhattacharyya_from_hellinger,
    f_divergence,
    hellinger_distance,
    hellinger_grad_pair,
    hellinger_total,
    hellinger_unit,
)
from src.utils.errors import DimensionMismatchError, DistributionError


def test_f_divergence_of_equal_distributions_is_zero():
    """Test f(1) = 0 gives zero divergence"""
    p = np.array([0.2, 0.3, 0.5])
    assert f_divergence(HELLINGER, p, p) == pytest.approx(0.0, abs=1e-15)
    assert f_divergence(KULLBACK_LEIBLER, p, p) == pytest.approx(0.0, abs=1e-15)


def test_f_divergence_kullback_leibler():
    """Test t log t generator reproduces KL(p || q)"""
    value = f_divergence(KULLBACK_LEIBLER, np.array([0.5, 0.5]), np.array([0.25, 0.75]))
    expected = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
    assert value == pytest.approx(expected, rel=1e-12)
    assert value == pytest.approx(0.1438, abs=1e-4)


def test_f_divergence_disjoint_support_hellinger():
    """Test zero-mass entries of q use the continuity extension"""
    value = f_divergence(lambda t: 1.0 - np.sqrt(t), np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                         slope_at_infinity=0.0)
    assert value == pytest.approx(1.0)
    assert f_divergence(KULLBACK_LEIBLER, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == math.inf


def test_f_divergence_bare_t_log_t_at_zero_mass():
    """Test an unguarded t log t generator uses its limit where p is zero"""
    def t_log_t(t):
        return t * np.log(t)

    value = f_divergence(t_log_t, np.array([0.5, 0.5, 0.0]), np.array([0.25, 0.25, 0.5]))
    assert value == pytest.approx(math.log(2.0))
    assert value == pytest.approx(f_divergence(KULLBACK_LEIBLER, np.array([0.5, 0.5, 0.0]),
                                               np.array([0.25, 0.25, 0.5])))


def test_f_divergence_rejects_bad_inputs():
    """Test normalization, length and f(1) checks"""
    with pytest.raises(DistributionError):
        f_divergence(HELLINGER, np.array([0.5, 0.6]), np.array([0.5, 0.5]))
    with pytest.raises(DimensionMismatchError):
        f_divergence(HELLINGER, np.array([1.0]), np.array([0.5, 0.5]))
    with pytest.raises(DistributionError):
        f_divergence(lambda t: t, np.array([0.5, 0.5]), np.array([0.5, 0.5]))


def test_hellinger_unit_values():
    """Test per-unit divergence at reference means"""
    assert hellinger_unit(0.5, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert hellinger_unit(1.0, 0.0) == pytest.approx(1.0)
    assert hellinger_unit(0.8, 0.2) == pytest.approx(0.2, abs=1e-12)


def test_hellinger_unit_matches_distribution_form():
    """Test the Bernoulli closed form against the two-point distributions"""
    value = hellinger_distance(np.array([0.3, 0.7]), np.array([0.9, 0.1]))
    assert hellinger_unit(0.7, 0.1) == pytest.approx(value, abs=1e-14)


def test_hellinger_unit_zero_only_on_equal_means(rng):
    """Test random pairs with distinct means give a positive divergence"""
    a = rng.random(1000)
    b = rng.random(1000)
    values = hellinger_unit(a, b)
    assert np.all(values[np.abs(a - b) > 1e-3] > 0.0)
    assert np.all(values <= 1.0)


def test_hellinger_unit_rejects_out_of_range():
    """Test means outside [0, 1] are rejected"""
    with pytest.raises(DistributionError):
        hellinger_unit(1.2, 0.5)


def test_hellinger_total_values():
    """Test summing per-unit divergences over a profile"""
    assert hellinger_total(np.array([0.3, 0.6]), np.array([0.3, 0.6])) == pytest.approx(0.0, abs=1e-15)
    assert hellinger_total(np.array([1.0, 1.0]), np.array([0.0, 0.0])) == pytest.approx(2.0)
    assert hellinger_total(np.array([0.8, 0.5]), np.array([0.2, 0.5])) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(DimensionMismatchError):
        hellinger_total(np.array([0.5]), np.array([0.5, 0.5]))


def test_hellinger_grad_pair_vanishes_on_identical_inputs():
    """Test the gradient at the minimum is exactly zero"""
    x = np.array([1.0, 0.0, 1.0])
    mu = np.array([0.3, 0.6])
    np.testing.assert_allclose(hellinger_grad_pair(x, x, mu, mu), 0.0, atol=1e-15)


def test_hellinger_grad_pair_matches_finite_differences(rng):
    """Test the closed-form weight gradient against the oracle"""
    theta = rng.normal(0.0, 1.0, (4, 3))
    bias = rng.normal(0.0, 1.0, 3)
    x_p = (rng.random(4) < 0.5).astype(np.float64)
    x_q = 1.0 - x_p

    def value(t):
        return hellinger_total(sigmoid(x_p @ t + bias), sigmoid(x_q @ t + bias))

    analytic = hellinger_grad_pair(x_p, x_q, sigmoid(x_p @ theta + bias), sigmoid(x_q @ theta + bias))
    numeric = finite_diff_grad(value, theta)
    assert relative_error(analytic, numeric) <= 1e-5


def test_bhattacharyya_values():
    """Test the distance and its link to the Hellinger divergence"""
    p = np.array([0.8, 0.2])
    q = np.array([0.2, 0.8])
    assert bhattacharyya(p, p) == pytest.approx(0.0, abs=1e-15)
    assert bhattacharyya(p, q) == pytest.approx(-math.log(0.8), rel=1e-12)
    assert bhattacharyya(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == math.inf
    assert bhattacharyya_from_hellinger(hellinger_distance(p, q)) == pytest.approx(bhattacharyya(p, q))
    assert bhattacharyya_from_hellinger(1.0) == math.inf
