"""Numerical primitives, seeded random streams and the finite-difference oracle"""
from src.numerics.functions import (
    DenseMatrix,
    DenseVector,
    SIGMOID_CLAMP,
    sigmoid,
    log_sigmoid,
    softplus,
    softmax,
    log_softmax,
)
from src.numerics.rng import RngState, make_rng
from src.numerics.gradcheck import finite_diff_grad, relative_error, pack_params, unpack_params

__all__ = [
    "DenseMatrix",
    "DenseVector",
    "SIGMOID_CLAMP",
    "sigmoid",
    "log_sigmoid",
    "softplus",
    "softmax",
    "log_softmax",
    "RngState",
    "make_rng",
    "finite_diff_grad",
    "relative_error",
    "pack_params",
    "unpack_params",
]
