"""
Test side-information construction: batch pairs, global pairs and pair statistics
"""
import numpy as np
import pytest

from src.numerics import make_rng
from src.regularization import (
    PairSet,
    expected_pair_count,
    pairs_from_batch,
    precompute_batch_pairs,
    sample_global_pairs,
    simulate_pair_counts,
)
from src.utils.errors import SideInfoError


@pytest.fixture
def labels():
    """Labels of a small three-class dataset"""
    return np.array([0, 1, 1, 0, 2, 0, 1, 2])


def test_pairs_from_batch_enumeration():
    """Test all different-label pairs in lexicographic order"""
    pairs = pairs_from_batch([0, 1, 1, 0])
    assert pairs.as_tuples() == [(0, 1), (0, 2), (1, 3), (2, 3)]


def test_pairs_from_batch_single_class():
    """Test all-equal labels give an empty set"""
    assert len(pairs_from_batch([3, 3, 3])) == 0


def test_pairs_from_batch_count_matches_histogram(labels):
    """Test pair count equals the class-histogram formula"""
    pairs = pairs_from_batch(labels)
    assert len(pairs) == expected_pair_count(np.bincount(labels))
    pairs.validate(labels)


def test_pairs_from_batch_rejects_empty():
    """Test an empty batch is rejected"""
    with pytest.raises(SideInfoError):
        pairs_from_batch([])


def test_pair_set_is_immutable():
    """Test the underlying array cannot be modified"""
    pairs = PairSet(np.array([[0, 1]]))
    with pytest.raises(ValueError):
        pairs.pairs[0, 0] = 5


def test_validate_rejects_bad_pairs(labels):
    """Test self-pairs, same-class pairs and out-of-range indices"""
    with pytest.raises(SideInfoError):
        PairSet(np.array([[0, 0]])).validate(labels)
    with pytest.raises(SideInfoError):
        PairSet(np.array([[0, 3]])).validate(labels)
    with pytest.raises(SideInfoError):
        PairSet(np.array([[0, 42]])).validate(labels)


def test_within_reindexes_to_batch():
    """Test global pairs are restricted to a batch and re-indexed"""
    pairs = PairSet(np.array([[0, 4], [1, 2], [2, 4], [3, 5]]))
    local = pairs.within([4, 2, 0], n_total=6)
    assert local.as_tuples() == [(2, 0), (1, 0)]


def test_sample_global_pairs_size_and_constraint(labels):
    """Test the requested number of valid pairs is returned"""
    pairs = sample_global_pairs(labels, 50, make_rng(3))
    assert len(pairs) == 50
    pairs.validate(labels)
    assert np.all(pairs.first < pairs.second)


def test_sample_global_pairs_is_deterministic(labels):
    """Test equal seeds give identical pair sets"""
    assert sample_global_pairs(labels, 30, make_rng(9)) == sample_global_pairs(labels, 30, make_rng(9))


def test_sample_global_pairs_edge_cases(labels):
    """Test zero count and single-class datasets"""
    assert len(sample_global_pairs(labels, 0, make_rng(1))) == 0
    with pytest.raises(SideInfoError):
        sample_global_pairs(np.zeros(5, dtype=int), 3, make_rng(1))


def test_precompute_batch_pairs(labels):
    """Test one pair set per batch, indexing into the batch"""
    batches = [np.array([0, 1, 2]), np.array([3, 5])]
    pair_sets = precompute_batch_pairs(labels, batches)
    assert [p.as_tuples() for p in pair_sets] == [[(0, 1), (0, 2)], []]


def test_simulated_pair_counts_match_expectation():
    """Test batches of 10 over 10 classes average about 40.5 pairs"""
    counts = simulate_pair_counts(10_000, 10, 10, make_rng(42))
    assert counts.shape == (10_000,)
    assert 38.0 <= counts.mean() <= 43.0
    assert counts.max() <= 45
