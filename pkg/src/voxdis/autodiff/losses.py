"""Classification losses as fused graph nodes."""

from __future__ import annotations

import numpy as np

from ..errors import LabelError, ShapeError
from .tensor import Tensor, _f64

BCE_CLAMP = 1e-7


def bce_loss(p: Tensor, y, weights=None) -> Tensor:
    """Mean binary cross-entropy -1/N sum[y log p + (1-y) log(1-p)].

    Probabilities are clamped to [1e-7, 1-1e-7]; optional per-sample weights
    (e.g. inverse class frequencies) multiply each term.
    """
    y = _f64(y)
    if y.shape != p.data.shape:
        raise ShapeError(f"bce_loss: probabilities {p.data.shape} vs labels {y.shape}")
    w = np.ones_like(y) if weights is None else _f64(weights)
    pc = np.clip(p.data, BCE_CLAMP, 1.0 - BCE_CLAMP)
    n = y.size
    value = -np.sum(w * (y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))) / n
    active = (p.data > BCE_CLAMP) & (p.data < 1.0 - BCE_CLAMP)

    def backward(g):
        dp = -w * (y / pc - (1.0 - y) / (1.0 - pc)) / n
        return (g * dp * active,)

    return Tensor(value, parents=(p,), op="bce_loss", backward=backward)


def softmax_ce_loss(logits: Tensor, class_ids) -> Tensor:
    """Mean softmax cross-entropy with log-sum-exp stabilization.

    logits: [N, K]; class_ids: integer vector of true classes in [0, K).
    """
    ids = np.asarray(class_ids, dtype=np.int64)
    x = logits.data
    if x.ndim != 2 or ids.shape != (x.shape[0],):
        raise ShapeError(f"softmax_ce_loss: logits {x.shape} vs ids {ids.shape}")
    n, k = x.shape
    if ids.size and (ids.min() < 0 or ids.max() >= k):
        raise LabelError(f"class id outside [0, {k}) in {ids}")
    m = x.max(axis=1, keepdims=True)
    z = x - m
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True)) + m
    value = float(np.mean(lse[:, 0] - x[np.arange(n), ids]))
    soft = np.exp(x - lse)

    def backward(g):
        d = soft.copy()
        d[np.arange(n), ids] -= 1.0
        return (g * d / n,)

    return Tensor(value, parents=(logits,), op="softmax_ce_loss", backward=backward)
