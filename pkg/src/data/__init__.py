"""Datasets, loaders and synthetic corpora"""
from src.data.datasets import (
    LabeledDataset,
    binarize,
    minibatches,
    resize_images,
    train_validation_split,
)
from src.data.loaders import load_cifar10_binary, load_digits, load_idx, load_named, write_idx
from src.data.synthetic import binary_blobs, synth_blobs

__all__ = [
    "LabeledDataset",
    "binarize",
    "minibatches",
    "resize_images",
    "train_validation_split",
    "load_cifar10_binary",
    "load_digits",
    "load_idx",
    "load_named",
    "write_idx",
    "binary_blobs",
    "synth_blobs",
]
