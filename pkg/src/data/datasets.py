"""
Labeled Datasets - Container, preprocessing and minibatch iteration
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from src.numerics import DenseMatrix, RngState, make_rng
from src.utils.errors import DimensionMismatchError, LabelRangeError

# MNIST's 60,000 training images split into train / validation
MNIST_TRAIN_SIZE = 50_000


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Inputs in [0, 1] (n_examples x n_features) with class ids in [0, n_classes)"""
    inputs: DenseMatrix
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        inputs = np.array(self.inputs, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if inputs.ndim != 2:
            raise DimensionMismatchError(f"inputs must be a matrix, got shape {inputs.shape}")
        if labels.shape != (inputs.shape[0],):
            raise DimensionMismatchError(
                f"{labels.shape[0] if labels.ndim else 0} labels for {inputs.shape[0]} examples"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise LabelRangeError(f"labels must lie in [0, {self.n_classes})")
        if inputs.size and (inputs.min() < 0.0 or inputs.max() > 1.0):
            raise ValueError("inputs must lie in [0, 1]")
        inputs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.inputs[indices], self.labels[indices], self.n_classes)

    def take(self, n: Optional[int]) -> "LabeledDataset":
        """First n examples (all when n is None)"""
        if n is None or n >= len(self):
            return self
        return self.subset(np.arange(n))

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


def binarize(dataset: LabeledDataset, threshold: float = 0.5) -> LabeledDataset:
    """Map every entry to 1 when >= threshold, else 0"""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    return LabeledDataset((dataset.inputs >= threshold).astype(np.float64), dataset.labels, dataset.n_classes)


def train_validation_split(dataset: LabeledDataset, n_train: int = MNIST_TRAIN_SIZE,
                           seed: Optional[int] = None) -> Tuple[LabeledDataset, LabeledDataset]:
    """
    Split into (train, validation)

    Args:
        dataset: Dataset to split
        n_train: Size of the train part
        seed: None keeps the first n_train examples as train; otherwise a
            seeded permutation decides

    Returns:
        (train, validation)
    """
    if not 0 < n_train <= len(dataset):
        raise ValueError(f"n_train must lie in (0, {len(dataset)}], got {n_train}")
    order = np.arange(len(dataset)) if seed is None else make_rng(seed).permutation(len(dataset))
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


def resize_images(dataset: LabeledDataset, image_shape: Tuple[int, int],
                  target_shape: Tuple[int, int]) -> LabeledDataset:
    """
    Downsample flat grayscale images with Pillow's box filter

    Args:
        dataset: Flat images of image_shape (rows, cols)
        image_shape: Source (rows, cols)
        target_shape: Destination (rows, cols), e.g. (8, 8)

    Returns:
        Dataset of flat target_shape images in [0, 1]
    """
    rows, cols = image_shape
    if rows * cols != dataset.n_features:
        raise DimensionMismatchError(f"{image_shape} images need {rows * cols} features, got {dataset.n_features}")
    out_rows, out_cols = target_shape
    resized = np.empty((len(dataset), out_rows * out_cols))
    for n, flat in enumerate(dataset.inputs):
        image = Image.fromarray(flat.reshape(rows, cols).astype(np.float32))
        small = image.resize((out_cols, out_rows), resample=Image.Resampling.BOX)
        resized[n] = np.asarray(small, dtype=np.float64).reshape(-1)
    return LabeledDataset(np.clip(resized, 0.0, 1.0), dataset.labels, dataset.n_classes)


def minibatches(n_examples: int, batch_size: int, rng: RngState) -> List[np.ndarray]:
    """
    Shuffled minibatch index arrays covering every example once

    The last batch is smaller when batch_size does not divide n_examples.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    order = rng.permutation(n_examples)
    return [order[start:start + batch_size] for start in range(0, n_examples, batch_size)]
