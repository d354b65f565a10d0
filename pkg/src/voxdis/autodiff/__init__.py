"""Minimal reverse-mode autodiff: tensors, ops, losses, Adam, grad checks."""

import numpy as np

from .gradcheck import OP_SPECS, GradCheckReport, check_op, grad_check
from .losses import bce_loss, softmax_ce_loss
from .optim import Adam
from .tensor import (
    Tensor,
    add,
    broadcast_to,
    concat,
    depthwise_conv1d,
    dropout,
    gelu,
    grad_reverse,
    index_axis,
    layer_norm,
    lstm_sum,
    matmul,
    mean_,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    slice_axis,
    softmax,
    sub,
    sum_,
    tanh_,
    transpose,
)


def rng_for(*key) -> np.random.Generator:
    """Counter-based generator keyed by a tuple of non-negative ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


__all__ = [
    "Tensor", "add", "sub", "mul", "scale", "matmul", "transpose", "reshape",
    "broadcast_to", "concat", "index_axis", "slice_axis", "sum_", "mean_",
    "relu", "gelu", "sigmoid", "tanh_", "softmax", "layer_norm", "dropout",
    "depthwise_conv1d", "grad_reverse", "lstm_sum",
    "bce_loss", "softmax_ce_loss", "Adam",
    "grad_check", "check_op", "GradCheckReport", "OP_SPECS", "rng_for",
]
