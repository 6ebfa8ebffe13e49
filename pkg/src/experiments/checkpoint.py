"""
Checkpoints - Binary container for RBM, DBN, MLP and VAE parameters

Layout (little-endian):
    magic      4 bytes  b"DRN1"
    kind       u8       1 rbm, 2 dbn, 3 mlp, 4 vae
    flags      u8       bit 0: biases enabled (rbm; dbn: every layer); bits 1-2: mlp output kind
    reserved   2 bytes  vae: byte 0 holds the encoder layer count; otherwise zero
    count      u32      number of arrays
    dims       count x (rows u32, cols u32)
    payload    float32 values of every array in order, row-major

Vectors are stored as single-row matrices. A dbn appends one extra row
holding the bias flag (0 or 1) of each layer.
"""
import struct
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.models.dbn import DbnStack
from src.models.dnn import Mlp, OutputKind
from src.models.rbm import Rbm
from src.models.vae import VaeModel
from src.utils.errors import (
    CheckpointDimensionError,
    CheckpointError,
    CheckpointKindError,
    CheckpointMagicError,
    CheckpointTruncatedError,
    DimensionMismatchError,
    NonFiniteError,
)
from src.utils.logging import logger

MAGIC = b"DRN1"
_HEADER = struct.Struct("<4sBBBBI")
_DIMS = struct.Struct("<II")

Model = Union[Rbm, DbnStack, Mlp, VaeModel]


class ModelKind(IntEnum):
    RBM = 1
    DBN = 2
    MLP = 3
    VAE = 4


_OUTPUT_CODES = {OutputKind.SOFTMAX: 0, OutputKind.LINEAR: 1, OutputKind.SIGMOID: 2}
_OUTPUT_KINDS = {code: kind for kind, code in _OUTPUT_CODES.items()}


def _as_matrix(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array)
    return array.reshape(1, -1) if array.ndim == 1 else array


def _describe(model: Model) -> Tuple[ModelKind, int, int, List[np.ndarray]]:
    """(kind, flags, reserved byte 0, arrays)"""
    if isinstance(model, Rbm):
        return ModelKind.RBM, int(model.biases_enabled), 0, model.params()
    if isinstance(model, DbnStack):
        if model.depth == 0:
            raise CheckpointError("cannot checkpoint an empty stack")
        enabled = [float(rbm.biases_enabled) for rbm in model.layers]
        arrays = [p for rbm in model.layers for p in rbm.params()]
        return ModelKind.DBN, int(all(enabled)), 0, [*arrays, np.array(enabled)]
    if isinstance(model, Mlp):
        return ModelKind.MLP, _OUTPUT_CODES[model.output] << 1, 0, model.params()
    if isinstance(model, VaeModel):
        return ModelKind.VAE, 0, model.encoder.n_layers, model.params()
    raise TypeError(f"cannot checkpoint {type(model).__name__}")


def encode_checkpoint(model: Model) -> bytes:
    """Serialize a model to the container format"""
    kind, flags, reserved, arrays = _describe(model)
    matrices = [_as_matrix(a) for a in arrays]
    parts = [_HEADER.pack(MAGIC, int(kind), flags, reserved, 0, len(matrices))]
    parts.extend(_DIMS.pack(*m.shape) for m in matrices)
    parts.extend(np.ascontiguousarray(m, dtype="<f4").tobytes() for m in matrices)
    return b"".join(parts)


def _read_arrays(data: bytes) -> Tuple[ModelKind, int, int, List[np.ndarray]]:
    if len(data) < _HEADER.size:
        raise CheckpointTruncatedError(f"{len(data)} bytes is shorter than the header")
    magic, kind_code, flags, reserved, _, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointMagicError(f"bad magic {magic!r}")
    try:
        kind = ModelKind(kind_code)
    except ValueError as e:
        raise CheckpointKindError(f"unknown model kind tag {kind_code}") from e

    dims_end = _HEADER.size + count * _DIMS.size
    if len(data) < dims_end:
        raise CheckpointTruncatedError(f"header declares {count} arrays but dimensions are cut off")
    shapes = [_DIMS.unpack_from(data, _HEADER.size + i * _DIMS.size) for i in range(count)]
    expected = dims_end + 4 * sum(rows * cols for rows, cols in shapes)
    if len(data) != expected:
        raise CheckpointTruncatedError(f"expected {expected} bytes, got {len(data)}")

    arrays = []
    offset = dims_end
    for rows, cols in shapes:
        values = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=offset)
        arrays.append(values.astype(np.float64).reshape(rows, cols))
        offset += 4 * rows * cols
    return kind, flags, reserved, arrays


def _row(array: np.ndarray, name: str) -> np.ndarray:
    if array.shape[0] != 1:
        raise CheckpointDimensionError(f"{name} must be stored as one row, got shape {array.shape}")
    return array[0]


def _rbm_from(arrays: Sequence[np.ndarray], biases_enabled: bool) -> Rbm:
    weights, visible_bias, hidden_bias = arrays
    return Rbm(weights, _row(visible_bias, "visible bias"), _row(hidden_bias, "hidden bias"), biases_enabled)


def _mlp_from(arrays: Sequence[np.ndarray], output: OutputKind) -> Mlp:
    if not arrays or len(arrays) % 2:
        raise CheckpointDimensionError(f"an MLP needs weight/bias pairs, got {len(arrays)} arrays")
    biases = [_row(b, f"bias {l}") for l, b in enumerate(arrays[1::2])]
    return Mlp(list(arrays[0::2]), biases, output)


def _build(kind: ModelKind, flags: int, reserved: int, arrays: List[np.ndarray]) -> Model:
    if kind is ModelKind.RBM:
        if len(arrays) != 3:
            raise CheckpointDimensionError(f"an RBM needs 3 arrays, got {len(arrays)}")
        return _rbm_from(arrays, bool(flags & 1))
    if kind is ModelKind.DBN:
        if len(arrays) < 4 or len(arrays) % 3 != 1:
            raise CheckpointDimensionError(f"a DBN needs 3 arrays per layer plus bias flags, got {len(arrays)}")
        layer_arrays, enabled = arrays[:-1], _row(arrays[-1], "bias flags")
        if enabled.shape[0] != len(layer_arrays) // 3 or not np.all((enabled == 0.0) | (enabled == 1.0)):
            raise CheckpointDimensionError(f"bias flags {enabled.tolist()} do not match {len(layer_arrays) // 3} layers")
        return DbnStack([_rbm_from(layer_arrays[3 * l:3 * l + 3], bool(flag)) for l, flag in enumerate(enabled)])
    if kind is ModelKind.MLP:
        code = (flags >> 1) & 0b11
        if code not in _OUTPUT_KINDS:
            raise CheckpointKindError(f"unknown MLP output code {code}")
        return _mlp_from(arrays, _OUTPUT_KINDS[code])
    split = 2 * reserved
    if not 0 < split < len(arrays):
        raise CheckpointDimensionError(f"encoder layer count {reserved} does not fit {len(arrays)} arrays")
    return VaeModel(_mlp_from(arrays[:split], OutputKind.LINEAR), _mlp_from(arrays[split:], OutputKind.SIGMOID))


def decode_checkpoint(data: bytes, expected: Optional[ModelKind] = None) -> Model:
    """
    Parse a container, validating every header field and the payload length

    Args:
        data: Container bytes
        expected: Required model kind (None accepts any)

    Raises:
        CheckpointMagicError: Wrong magic
        CheckpointKindError: Unknown kind, or not the expected one
        CheckpointTruncatedError: Payload length differs from the header
        CheckpointDimensionError: Array shapes do not form a model
    """
    kind, flags, reserved, arrays = _read_arrays(data)
    if expected is not None and kind is not ModelKind(expected):
        raise CheckpointKindError(f"checkpoint holds a {kind.name.lower()}, expected {ModelKind(expected).name.lower()}")
    try:
        return _build(kind, flags, reserved, arrays)
    except (DimensionMismatchError, ValueError) as e:
        if isinstance(e, CheckpointError):
            raise
        raise CheckpointDimensionError(str(e)) from e
    except NonFiniteError as e:
        raise CheckpointError(str(e)) from e


def save_checkpoint(model: Model, path: str | Path) -> Path:
    """Write a model; returns the path"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(model))
    logger.debug(f"Saved checkpoint {path}")
    return path


def load_checkpoint(path: str | Path, expected: Optional[ModelKind] = None) -> Model:
    """Read a model written by save_checkpoint"""
    return decode_checkpoint(Path(path).read_bytes(), expected)
