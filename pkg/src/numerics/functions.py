"""
Elementwise Math - Logistic and softmax functions on float64 arrays
"""
from typing import Union

import numpy as np
from numpy.typing import NDArray

DenseMatrix = NDArray[np.float64]
DenseVector = NDArray[np.float64]

ArrayLike = Union[float, np.ndarray]

# sigma saturates below machine precision past this point
SIGMOID_CLAMP = 30.0


def sigmoid(z: ArrayLike) -> ArrayLike:
    """
    Logistic function 1 / (1 + exp(-z))

    Inputs are clamped to [-30, 30] before exponentiation.

    Args:
        z: Scalar or array of finite reals

    Returns:
        Values in (0, 1), same shape as the input
    """
    clamped = np.clip(np.asarray(z, dtype=np.float64), -SIGMOID_CLAMP, SIGMOID_CLAMP)
    out = 1.0 / (1.0 + np.exp(-clamped))
    if np.ndim(out) == 0:
        return float(out)
    return out


def softplus(z: ArrayLike) -> ArrayLike:
    """log(1 + exp(z)), computed without overflow"""
    return np.logaddexp(0.0, z)


def log_sigmoid(z: ArrayLike) -> ArrayLike:
    """log sigma(z), computed without overflow"""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=np.float64))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax of a (batch, classes) or (classes,) array"""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax; each row sums to one"""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    expz = np.exp(shifted)
    return expz / np.sum(expz, axis=-1, keepdims=True)
