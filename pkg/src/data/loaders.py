"""
Dataset Loaders - MNIST IDX files, CIFAR-10 binary batches and bundled digits
"""
import gzip
import struct
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn import datasets as sk_datasets

from src.data.datasets import LabeledDataset
from src.utils.errors import (
    BadMagicError,
    CountMismatchError,
    DatasetFormatError,
    LabelRangeError,
    TruncatedFileError,
)
from src.utils.logging import logger

IDX_IMAGES_MAGIC = 2051  # 0x00000803: unsigned bytes, 3 dimensions
IDX_LABELS_MAGIC = 2049  # 0x00000801: unsigned bytes, 1 dimension

CIFAR_IMAGE_BYTES = 3 * 32 * 32
CIFAR_RECORD_BYTES = 1 + CIFAR_IMAGE_BYTES
CIFAR_CLASSES = 10

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR_FILES = {
    "train": tuple(f"data_batch_{i}.bin" for i in range(1, 6)),
    "test": ("test_batch.bin",),
}

_GZIP_MAGIC = b"\x1f\x8b"


def _read_bytes(path: str | Path) -> bytes:
    """Read a file, transparently decompressing gzip content"""
    raw = Path(path).read_bytes()
    if raw[:2] == _GZIP_MAGIC:
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as e:
            raise TruncatedFileError(f"{path}: corrupt gzip stream ({e})") from e
    return raw


def _parse_idx(raw: bytes, expected_magic: int, path: str | Path) -> Tuple[Tuple[int, ...], np.ndarray]:
    if len(raw) < 4:
        raise TruncatedFileError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise BadMagicError(f"{path}: magic {magic} (expected {expected_magic})")
    n_dims = magic & 0xFF
    header_size = 4 + 4 * n_dims
    if len(raw) < header_size:
        raise TruncatedFileError(f"{path}: file too short for {n_dims} dimension sizes")
    dims = struct.unpack(f">{n_dims}I", raw[4:header_size])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = np.frombuffer(raw, dtype=np.uint8, offset=header_size)
    if payload.size < expected:
        raise TruncatedFileError(f"{path}: {payload.size} payload bytes, header declares {expected}")
    if payload.size > expected:
        raise DatasetFormatError(f"{path}: {payload.size - expected} trailing bytes after payload")
    return dims, payload


def load_idx(images_path: str | Path, labels_path: str | Path, n_classes: int = 10) -> LabeledDataset:
    """
    Load an IDX image/label file pair (MNIST layout)

    Headers are big-endian; pixels are scaled to [0, 1] by /255. Files may
    be gzip-compressed.

    Args:
        images_path: IDX3 image file (magic 2051)
        labels_path: IDX1 label file (magic 2049)
        n_classes: Number of classes

    Returns:
        LabeledDataset with rows*cols features

    Raises:
        BadMagicError: Unexpected magic number
        TruncatedFileError: File shorter than its header declares
        CountMismatchError: Image and label counts differ
        LabelRangeError: Label >= n_classes
    """
    image_dims, pixels = _parse_idx(_read_bytes(images_path), IDX_IMAGES_MAGIC, images_path)
    (n_labels,), labels = _parse_idx(_read_bytes(labels_path), IDX_LABELS_MAGIC, labels_path)
    n_images, rows, cols = image_dims
    if n_images != n_labels:
        raise CountMismatchError(f"{n_images} images but {n_labels} labels")
    if labels.size and int(labels.max()) >= n_classes:
        raise LabelRangeError(f"{labels_path}: label {int(labels.max())} >= {n_classes}")

    inputs = pixels.reshape(n_images, rows * cols).astype(np.float64) / 255.0
    logger.debug(f"Loaded {n_images} IDX images of {rows}x{cols} from {images_path}")
    return LabeledDataset(inputs, labels.astype(np.int64), n_classes)


def write_idx(dataset: LabeledDataset, images_path: str | Path, labels_path: str | Path,
              image_shape: Tuple[int, int]):
    """Write a dataset as an uncompressed IDX pair; pixels are rounded to /255 steps"""
    rows, cols = image_shape
    n = len(dataset)
    pixels = np.rint(dataset.inputs * 255.0).astype(np.uint8)
    Path(images_path).write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols) + pixels.tobytes())
    Path(labels_path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, n) + dataset.labels.astype(np.uint8).tobytes())


def load_cifar10_binary(paths: Sequence[str | Path]) -> LabeledDataset:
    """
    Load CIFAR-10 binary batch files

    Each record is one label byte followed by 3072 pixel bytes (red, green,
    blue planes of 32x32). Images stay flat; pixels are scaled by /255.

    Args:
        paths: One or more batch files, concatenated in order

    Returns:
        LabeledDataset with 3072 features and 10 classes

    Raises:
        TruncatedFileError: File length not a multiple of 3073
        LabelRangeError: Label >= 10
    """
    if not paths:
        raise ValueError("at least one CIFAR-10 batch file is required")
    inputs, labels = [], []
    for path in paths:
        raw = _read_bytes(path)
        if len(raw) % CIFAR_RECORD_BYTES:
            raise TruncatedFileError(
                f"{path}: {len(raw)} bytes is not a multiple of the {CIFAR_RECORD_BYTES}-byte record"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        if records.shape[0] and int(records[:, 0].max()) >= CIFAR_CLASSES:
            raise LabelRangeError(f"{path}: label {int(records[:, 0].max())} >= {CIFAR_CLASSES}")
        labels.append(records[:, 0].astype(np.int64))
        inputs.append(records[:, 1:].astype(np.float64) / 255.0)
        logger.debug(f"Loaded {records.shape[0]} CIFAR-10 records from {path}")
    return LabeledDataset(np.concatenate(inputs), np.concatenate(labels), CIFAR_CLASSES)


def load_digits() -> LabeledDataset:
    """scikit-learn's bundled 8x8 handwritten digits (1797 images), scaled by /16"""
    bunch = sk_datasets.load_digits()
    return LabeledDataset(bunch.data.astype(np.float64) / 16.0, bunch.target.astype(np.int64), 10)


def _find(root: Path, name: str) -> Path:
    for candidate in (root / name, root / f"{name}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{name}(.gz) not found under {root}")


def load_named(name: str, split: str, root: Optional[str | Path] = None) -> LabeledDataset:
    """
    Load a dataset by name

    Args:
        name: "mnist", "cifar10" or "digits"
        split: "train" or "test"; the bundled digits use the first 1297
            images as train and the remaining 500 as test
        root: Directory holding the dataset files (mnist, cifar10)

    Returns:
        LabeledDataset
    """
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    if name == "digits":
        digits = load_digits()
        n_train = len(digits) - 500
        return digits.subset(np.arange(n_train)) if split == "train" else digits.subset(np.arange(n_train, len(digits)))
    if root is None:
        raise FileNotFoundError(f"dataset {name!r} needs a data root (set DR_DATA_ROOT or --data-root)")
    root = Path(root)
    if name == "mnist":
        images, labels = MNIST_FILES[split]
        return load_idx(_find(root, images), _find(root, labels))
    if name == "cifar10":
        return load_cifar10_binary([_find(root, f) for f in CIFAR_FILES[split]])
    raise ValueError(f"unknown dataset {name!r}")
