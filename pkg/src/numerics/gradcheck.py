"""
Gradient Oracle - Central finite differences and parameter packing
"""
import math
from typing import Callable, List, Sequence, Tuple

import numpy as np

from src.utils.errors import DimensionMismatchError, NonFiniteError

DEFAULT_EPS = 1e-5


def finite_diff_grad(
    f: Callable[[np.ndarray], float],
    params: np.ndarray,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """
    Central-difference gradient of a scalar function

    Args:
        f: Scalar function of a parameter array
        params: Point of evaluation (any shape; not modified)
        eps: Step per coordinate

    Returns:
        Array shaped like params with (f(p + eps e_i) - f(p - eps e_i)) / (2 eps)

    Raises:
        NonFiniteError: f returned NaN or infinity at a probe point
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    point = np.array(params, dtype=np.float64, copy=True)
    flat = point.reshape(-1)
    grad = np.zeros_like(flat)

    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        upper = float(f(point))
        flat[i] = original - eps
        lower = float(f(point))
        flat[i] = original
        if not (math.isfinite(upper) and math.isfinite(lower)):
            raise NonFiniteError(f"non-finite function value while probing coordinate {i}")
        grad[i] = (upper - lower) / (2.0 * eps)

    return grad.reshape(point.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-12) -> float:
    """
    Norm-wise relative error ||a - b|| / max(||a||, ||b||, floor)

    Args:
        analytic: First gradient
        numeric: Second gradient, same shape

    Returns:
        Relative error (0 when both are zero)
    """
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"gradient shapes differ: {a.shape} vs {b.shape}")
    scale = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / scale)


def pack_params(arrays: Sequence[np.ndarray]) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    """
    Flatten a list of arrays into one vector

    Returns:
        (vector, shapes) where shapes restores the list via unpack_params
    """
    shapes = [tuple(np.shape(a)) for a in arrays]
    if not arrays:
        return np.zeros(0), shapes
    vector = np.concatenate([np.asarray(a, dtype=np.float64).reshape(-1) for a in arrays])
    return vector, shapes


def unpack_params(vector: np.ndarray, shapes: Sequence[Tuple[int, ...]]) -> List[np.ndarray]:
    """Inverse of pack_params; returns copies"""
    sizes = [int(np.prod(shape)) for shape in shapes]
    if sum(sizes) != np.size(vector):
        raise DimensionMismatchError(
            f"vector of length {np.size(vector)} cannot fill shapes totalling {sum(sizes)}"
        )
    arrays = []
    offset = 0
    for shape, size in zip(shapes, sizes):
        arrays.append(np.array(vector[offset:offset + size], dtype=np.float64).reshape(shape))
        offset += size
    return arrays
