"""
Side Information - Different-class pairs that supervise the regularizer
"""
from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from src.numerics import RngState
from src.utils.errors import SideInfoError

# candidate draws per missing pair in sample_global_pairs
_OVERSAMPLE = 2


def _as_pair_array(pairs) -> np.ndarray:
    array = np.asarray(pairs, dtype=np.int64)
    if array.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if array.ndim != 2 or array.shape[1] != 2:
        raise SideInfoError(f"pairs must have shape (n, 2), got {array.shape}")
    return array


@dataclass(frozen=True, eq=False)
class PairSet:
    """Immutable set of index pairs (p, q) whose labels differ"""
    pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    def __post_init__(self):
        array = np.array(_as_pair_array(self.pairs), copy=True)
        array.flags.writeable = False
        object.__setattr__(self, "pairs", array)

    @classmethod
    def empty(cls) -> "PairSet":
        return cls(np.zeros((0, 2), dtype=np.int64))

    def __len__(self) -> int:
        return int(self.pairs.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairSet):
            return NotImplemented
        return np.array_equal(self.pairs, other.pairs)

    def __hash__(self) -> int:
        return hash(self.pairs.tobytes())

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        for p, q in self.pairs:
            yield int(p), int(q)

    @property
    def first(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def second(self) -> np.ndarray:
        return self.pairs[:, 1]

    def as_tuples(self) -> List[Tuple[int, int]]:
        return [(int(p), int(q)) for p, q in self.pairs]

    def validate(self, labels: np.ndarray) -> "PairSet":
        """
        Check indices and the different-label constraint

        Args:
            labels: Labels of the collection the pairs index into

        Returns:
            self, for chaining

        Raises:
            SideInfoError: index out of range, self-pair or same-label pair
        """
        labels = np.asarray(labels)
        if len(self) == 0:
            return self
        if self.pairs.min() < 0 or self.pairs.max() >= labels.shape[0]:
            raise SideInfoError(
                f"pair index out of range for a collection of {labels.shape[0]} items"
            )
        if np.any(self.first == self.second):
            raise SideInfoError("side information contains a self-pair")
        if np.any(labels[self.first] == labels[self.second]):
            raise SideInfoError("side information contains a same-class pair")
        return self

    def within(self, batch_indices: Sequence[int], n_total: int) -> "PairSet":
        """
        Restrict global pairs to one minibatch

        Keeps the pairs whose endpoints both fall in the batch and re-indexes
        them to positions within the batch, in the set's own order.

        Args:
            batch_indices: Dataset indices forming the batch
            n_total: Size of the dataset the pairs index into

        Returns:
            PairSet indexing into the batch
        """
        batch_indices = np.asarray(batch_indices, dtype=np.int64)
        position = np.full(n_total, -1, dtype=np.int64)
        position[batch_indices] = np.arange(batch_indices.shape[0])
        if len(self) == 0:
            return PairSet.empty()
        if self.pairs.max() >= n_total:
            raise SideInfoError(f"pair index out of range for a dataset of {n_total} items")
        local = position[self.pairs]
        keep = np.all(local >= 0, axis=1)
        return PairSet(local[keep])


def pairs_from_batch(labels: Sequence[int]) -> PairSet:
    """
    All unordered different-label pairs of a batch

    Args:
        labels: Class ids of the batch members

    Returns:
        Pairs (p, q) with p < q in lexicographic order
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] == 0:
        raise SideInfoError("labels must be a nonempty vector")
    first, second = np.triu_indices(labels.shape[0], k=1)
    differ = labels[first] != labels[second]
    return PairSet(np.stack([first[differ], second[differ]], axis=1))


def expected_pair_count(class_counts: Sequence[int]) -> int:
    """Number of different-label pairs: sum over c < c' of n_c n_c'"""
    counts = np.asarray(class_counts, dtype=np.int64)
    total = int(counts.sum())
    return int((total * total - int(np.sum(counts * counts))) // 2)


def sample_global_pairs(labels: Sequence[int], count: int, rng: RngState) -> PairSet:
    """
    Draw different-label pairs uniformly from a whole dataset

    Candidates (p, q) are drawn uniformly with replacement; same-label draws
    (self-pairs included) are rejected, repeated pairs are kept. Each pair is
    stored as (min, max).

    Args:
        labels: Class ids of the dataset
        count: Number of pairs to return
        rng: Random stream

    Returns:
        PairSet of exactly `count` pairs
    """
    labels = np.asarray(labels)
    if count < 0:
        raise SideInfoError(f"count must be non-negative, got {count}")
    if count == 0:
        return PairSet.empty()
    if np.unique(labels).shape[0] < 2:
        raise SideInfoError("side information needs at least two classes")

    n = labels.shape[0]
    chunks = []
    remaining = count
    while remaining > 0:
        draws = max(remaining * _OVERSAMPLE, 16)
        p = rng.integers(0, n, size=draws)
        q = rng.integers(0, n, size=draws)
        keep = labels[p] != labels[q]
        accepted = np.stack([np.minimum(p, q), np.maximum(p, q)], axis=1)[keep][:remaining]
        chunks.append(accepted)
        remaining -= accepted.shape[0]
    return PairSet(np.concatenate(chunks, axis=0))


def precompute_batch_pairs(labels: Sequence[int], batches: Sequence[np.ndarray]) -> List[PairSet]:
    """
    Side information for every minibatch of an epoch, built before training it

    Args:
        labels: Labels of the dataset
        batches: Index arrays, one per minibatch

    Returns:
        One PairSet per batch, indexing into the batch
    """
    labels = np.asarray(labels)
    return [pairs_from_batch(labels[np.asarray(batch)]) for batch in batches]


def simulate_pair_counts(n_batches: int, batch_size: int, n_classes: int, rng: RngState) -> np.ndarray:
    """
    Pair counts of batches whose labels are drawn uniformly from n_classes

    Returns:
        Integer vector of length n_batches
    """
    labels = rng.integers(0, n_classes, size=(n_batches, batch_size))
    counts = np.empty(n_batches, dtype=np.int64)
    for b in range(n_batches):
        counts[b] = expected_pair_count(np.bincount(labels[b], minlength=n_classes))
    return counts
