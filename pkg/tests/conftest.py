"""
Shared fixtures
"""
import numpy as np
import pytest

from src.models.rbm import Rbm
from src.numerics import make_rng


@pytest.fixture
def rng():
    """Seeded random stream"""
    return make_rng(1234)


@pytest.fixture
def small_rbm(rng):
    """RBM with 5 visible and 4 hidden units and non-trivial parameters"""
    return Rbm(rng.normal(0.0, 0.5, (5, 4)), rng.normal(0.0, 0.5, 5), rng.normal(0.0, 0.5, 4))


@pytest.fixture
def binary_batch(rng):
    """Six binary rows of five bits"""
    return (rng.random((6, 5)) < 0.5).astype(np.float64)


@pytest.fixture
def two_class_labels():
    """Labels of binary_batch, three per class"""
    return np.array([0, 1, 0, 1, 1, 0])
