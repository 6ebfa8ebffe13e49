"""
Synthetic Data - Seeded toy corpora for desk-scale runs and tests
"""
import numpy as np

from src.data.datasets import LabeledDataset
from src.numerics import RngState


def synth_blobs(n_per_class: int, n_classes: int, dim: int, separation: float,
                rng: RngState, noise: float = 0.1) -> LabeledDataset:
    """
    Gaussian blobs around distinct class centers, clipped to [0, 1]

    Centers are drawn once from the stream and pushed apart by `separation`
    around 0.5; every class gets exactly n_per_class examples, ordered by
    class.

    Args:
        n_per_class: Examples per class (>= 1)
        n_classes: Number of classes (>= 1)
        dim: Feature count (>= 1)
        separation: Spread of the class centers
        rng: Random stream
        noise: Standard deviation around each center

    Returns:
        LabeledDataset of n_per_class * n_classes rows
    """
    if min(n_per_class, n_classes, dim) < 1:
        raise ValueError("n_per_class, n_classes and dim must all be at least 1")
    directions = rng.choice([-1.0, 1.0], size=(n_classes, dim))
    centers = np.clip(0.5 + 0.5 * separation * directions * rng.random((n_classes, dim)), 0.0, 1.0)
    labels = np.repeat(np.arange(n_classes), n_per_class)
    inputs = centers[labels] + noise * rng.standard_normal((labels.shape[0], dim))
    return LabeledDataset(np.clip(inputs, 0.0, 1.0), labels, n_classes)


def binary_blobs(n_per_class: int, n_classes: int, dim: int, rng: RngState,
                 flip: float = 0.1) -> LabeledDataset:
    """
    Binary prototypes with independent bit flips

    Args:
        n_per_class: Examples per class
        n_classes: Number of classes
        dim: Bits per example
        rng: Random stream
        flip: Probability of flipping each prototype bit

    Returns:
        LabeledDataset with entries in {0, 1}
    """
    if min(n_per_class, n_classes, dim) < 1:
        raise ValueError("n_per_class, n_classes and dim must all be at least 1")
    prototypes = (rng.random((n_classes, dim)) < 0.5).astype(np.float64)
    labels = np.repeat(np.arange(n_classes), n_per_class)
    flips = rng.random((labels.shape[0], dim)) < flip
    inputs = np.where(flips, 1.0 - prototypes[labels], prototypes[labels])
    return LabeledDataset(inputs, labels, n_classes)
