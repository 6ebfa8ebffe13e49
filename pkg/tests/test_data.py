"""
Test dataset containers, preprocessing, IDX and CIFAR-10 loaders
"""
import gzip
import struct

import numpy as np
import pytest

from src.data import (
    LabeledDataset,
    binarize,
    binary_blobs,
    load_cifar10_binary,
    load_digits,
    load_idx,
    load_named,
    minibatches,
    resize_images,
    synth_blobs,
    train_validation_split,
    write_idx,
)
from src.data.loaders import CIFAR_RECORD_BYTES
from src.numerics import make_rng
from src.utils.errors import (
    BadMagicError,
    CountMismatchError,
    DatasetFormatError,
    DimensionMismatchError,
    LabelRangeError,
    TruncatedFileError,
)


@pytest.fixture
def idx_files(tmp_path):
    """Three 2x3 images with labels 7, 0, 9, written byte by byte"""
    pixels = bytes(range(0, 18 * 10, 10))
    images = tmp_path / "images-idx3-ubyte"
    labels = tmp_path / "labels-idx1-ubyte"
    images.write_bytes(struct.pack(">IIII", 2051, 3, 2, 3) + pixels)
    labels.write_bytes(struct.pack(">II", 2049, 3) + bytes([7, 0, 9]))
    return images, labels


@pytest.fixture
def cifar_file(tmp_path):
    """Two CIFAR-10 records with labels 3 and 8"""
    path = tmp_path / "data_batch_1.bin"
    records = [bytes([3]) + bytes([255]) * (CIFAR_RECORD_BYTES - 1),
               bytes([8]) + bytes(CIFAR_RECORD_BYTES - 1)]
    path.write_bytes(b"".join(records))
    return path


@pytest.fixture
def dataset():
    """Four examples, two classes"""
    return LabeledDataset(np.array([[0.0, 0.5], [1.0, 0.2], [0.7, 0.7], [0.1, 0.9]]), np.array([0, 1, 1, 0]), 2)


def test_dataset_validation():
    """Test shape, range and label checks"""
    with pytest.raises(DimensionMismatchError):
        LabeledDataset(np.zeros((3, 2)), np.zeros(2, dtype=int), 2)
    with pytest.raises(LabelRangeError):
        LabeledDataset(np.zeros((2, 2)), np.array([0, 2]), 2)
    with pytest.raises(ValueError):
        LabeledDataset(np.full((2, 2), 1.5), np.array([0, 1]), 2)


def test_dataset_is_read_only(dataset):
    """Test arrays cannot be modified in place"""
    with pytest.raises(ValueError):
        dataset.inputs[0, 0] = 1.0


def test_single_class_dataset_is_valid():
    """Test n_classes of one is accepted"""
    single = LabeledDataset(np.zeros((3, 2)), np.zeros(3, dtype=int), 1)
    assert single.class_counts().tolist() == [3]


def test_class_counts_and_take(dataset):
    """Test the label histogram and prefix subsets"""
    assert dataset.class_counts().tolist() == [2, 2]
    assert len(dataset.take(3)) == 3
    assert dataset.take(None) is dataset
    assert dataset.n_features == 2


def test_binarize_threshold_convention(dataset):
    """Test entries at the threshold become 1 and binarizing twice changes nothing"""
    once = binarize(dataset)
    np.testing.assert_array_equal(once.inputs, [[0, 1], [1, 0], [1, 1], [0, 1]])
    np.testing.assert_array_equal(binarize(once).inputs, once.inputs)
    zeros = LabeledDataset(np.zeros((2, 3)), np.array([0, 1]), 2)
    np.testing.assert_array_equal(binarize(zeros).inputs, 0.0)


def test_train_validation_split(dataset):
    """Test the default keeps the first rows and a seed permutes deterministically"""
    train, validation = train_validation_split(dataset, 3)
    np.testing.assert_array_equal(train.inputs, dataset.inputs[:3])
    assert len(validation) == 1
    a, _ = train_validation_split(dataset, 2, seed=5)
    b, _ = train_validation_split(dataset, 2, seed=5)
    np.testing.assert_array_equal(a.labels, b.labels)
    with pytest.raises(ValueError):
        train_validation_split(dataset, 9)


def test_resize_images_box_filter():
    """Test 4x4 to 2x2 downsampling averages each block"""
    image = np.array([[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5]], dtype=np.float64)
    small = resize_images(LabeledDataset(image.reshape(1, -1), np.array([0]), 1), (4, 4), (2, 2))
    np.testing.assert_allclose(small.inputs, [[1.0, 0.0, 0.0, 0.5]], atol=1e-6)
    with pytest.raises(DimensionMismatchError):
        resize_images(small, (4, 4), (2, 2))


def test_minibatches_cover_every_example():
    """Test shuffled batches partition the index range"""
    batches = minibatches(10, 4, make_rng(0))
    assert [len(b) for b in batches] == [4, 4, 2]
    assert sorted(np.concatenate(batches).tolist()) == list(range(10))
    with pytest.raises(ValueError):
        minibatches(10, 0, make_rng(0))


def test_synthetic_corpora():
    """Test blob sizes, ranges and determinism"""
    blobs = synth_blobs(4, 3, 5, 0.8, make_rng(1))
    assert len(blobs) == 12
    assert blobs.class_counts().tolist() == [4, 4, 4]
    np.testing.assert_array_equal(blobs.inputs, synth_blobs(4, 3, 5, 0.8, make_rng(1)).inputs)
    bits = binary_blobs(3, 2, 6, make_rng(1))
    assert set(np.unique(bits.inputs)) <= {0.0, 1.0}
    with pytest.raises(ValueError):
        synth_blobs(0, 3, 5, 0.8, make_rng(1))


def test_load_idx(idx_files):
    """Test header parsing and /255 scaling"""
    loaded = load_idx(*idx_files)
    assert loaded.inputs.shape == (3, 6)
    assert loaded.labels.tolist() == [7, 0, 9]
    assert loaded.inputs[0, 1] == pytest.approx(10 / 255)
    assert loaded.inputs[2, 5] == pytest.approx(170 / 255)


def test_load_idx_gzip(idx_files, tmp_path):
    """Test compressed files load like plain ones"""
    images, labels = idx_files
    packed = tmp_path / "images.gz"
    packed.write_bytes(gzip.compress(images.read_bytes()))
    np.testing.assert_array_equal(load_idx(packed, labels).inputs, load_idx(images, labels).inputs)


def test_load_idx_is_pure(idx_files):
    """Test the same files give identical datasets"""
    np.testing.assert_array_equal(load_idx(*idx_files).inputs, load_idx(*idx_files).inputs)


def test_load_idx_bad_magic(idx_files):
    """Test a corrupted magic number is rejected"""
    images, labels = idx_files
    raw = bytearray(images.read_bytes())
    raw[3] = 0x01
    images.write_bytes(bytes(raw))
    with pytest.raises(BadMagicError):
        load_idx(images, labels)


def test_load_idx_truncated_and_trailing(idx_files):
    """Test short payloads and extra bytes"""
    images, labels = idx_files
    raw = images.read_bytes()
    images.write_bytes(raw[:-1])
    with pytest.raises(TruncatedFileError):
        load_idx(images, labels)
    images.write_bytes(raw + b"\x00")
    with pytest.raises(DatasetFormatError):
        load_idx(images, labels)


def test_load_idx_count_and_label_checks(idx_files):
    """Test mismatched counts and out-of-range labels"""
    images, labels = idx_files
    labels.write_bytes(struct.pack(">II", 2049, 2) + bytes([1, 2]))
    with pytest.raises(CountMismatchError):
        load_idx(images, labels)
    labels.write_bytes(struct.pack(">II", 2049, 3) + bytes([1, 2, 3]))
    with pytest.raises(LabelRangeError):
        load_idx(images, labels, n_classes=3)


def test_write_idx_reads_back(idx_files, tmp_path):
    """Test writing then loading keeps pixels on the /255 grid"""
    loaded = load_idx(*idx_files)
    images, labels = tmp_path / "out-images", tmp_path / "out-labels"
    write_idx(loaded, images, labels, (2, 3))
    assert images.read_bytes() == idx_files[0].read_bytes()
    assert labels.read_bytes() == idx_files[1].read_bytes()


def test_load_cifar10_binary(cifar_file):
    """Test record parsing"""
    loaded = load_cifar10_binary([cifar_file])
    assert loaded.inputs.shape == (2, 3072)
    assert loaded.labels.tolist() == [3, 8]
    np.testing.assert_array_equal(loaded.inputs[0], 1.0)
    np.testing.assert_array_equal(loaded.inputs[1], 0.0)


def test_load_cifar10_binary_errors(cifar_file):
    """Test short files and bad labels"""
    raw = cifar_file.read_bytes()
    cifar_file.write_bytes(raw[:-5])
    with pytest.raises(TruncatedFileError):
        load_cifar10_binary([cifar_file])
    cifar_file.write_bytes(bytes([12]) + raw[1:])
    with pytest.raises(LabelRangeError):
        load_cifar10_binary([cifar_file])
    with pytest.raises(ValueError):
        load_cifar10_binary([])


def test_load_named_mnist_layout(idx_files, tmp_path):
    """Test MNIST files are found by their published names"""
    images, labels = idx_files
    images.rename(tmp_path / "t10k-images-idx3-ubyte")
    labels.rename(tmp_path / "t10k-labels-idx1-ubyte")
    assert len(load_named("mnist", "test", tmp_path)) == 3
    with pytest.raises(FileNotFoundError):
        load_named("mnist", "train", tmp_path)
    with pytest.raises(ValueError):
        load_named("mnist", "validation", tmp_path)


def test_load_digits_split():
    """Test the bundled digits split into 1297 train and 500 test images"""
    train = load_named("digits", "train")
    test = load_named("digits", "test")
    assert (len(train), len(test)) == (1297, 500)
    assert train.n_features == 64
    assert load_digits().inputs.max() <= 1.0
