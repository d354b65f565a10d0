"""Central finite-difference verification of every registered operation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .losses import bce_loss, softmax_ce_loss
from .tensor import Tensor

FD_STEP = 1e-4
KINK_MARGIN = 1e-3


@dataclass
class GradCheckReport:
    op_name: str
    max_rel_err: float
    worst_input: int = 0
    worst_index: int = 0


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))


def grad_check(fn, inputs: list[Tensor], name: str = "op",
               grad_map=None, step: float = FD_STEP) -> GradCheckReport:
    """Compare backward() gradients against central finite differences.

    The output is scalarized with a fixed random linear functional.
    grad_map post-processes the numeric gradient before comparison, which
    lets intentionally non-derivative backwards (gradient reversal) declare
    their contract.
    """
    rng = np.random.default_rng(12345)
    out = fn(*inputs)
    w = rng.normal(size=out.data.shape)
    loss = T.sum_(T.mul(out, Tensor(w)))
    for t in inputs:
        t.grad = None
    loss.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    report = GradCheckReport(op_name=name, max_rel_err=0.0)
    for ti, t in enumerate(inputs):
        flat = t.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            fp = float(np.sum(fn(*inputs).data * w))
            flat[j] = orig - step
            fm = float(np.sum(fn(*inputs).data * w))
            flat[j] = orig
            numeric[j] = (fp - fm) / (2.0 * step)
        numeric = numeric.reshape(t.data.shape)
        if grad_map is not None:
            numeric = grad_map(numeric)
        err = _rel_err(analytic[ti], numeric)
        worst = float(err.max()) if err.size else 0.0
        if worst > report.max_rel_err:
            report.max_rel_err = worst
            report.worst_input = ti
            report.worst_index = int(err.argmax())
    return report


def _sample(rng, shape, away_from_zero: bool = False):
    x = rng.normal(0.0, 1.0, shape)
    if away_from_zero:
        while True:
            bad = np.abs(x) < KINK_MARGIN
            if not bad.any():
                break
            x[bad] = rng.normal(0.0, 1.0, int(bad.sum()))
    return x


def _op_specs():
    """name -> (builder(rng) -> (fn, inputs, grad_map))."""

    def simple(op, *shapes, away=False):
        def build(rng):
            return op, [Tensor(_sample(rng, s, away), requires_grad=True) for s in shapes], None
        return build

    def dropout_fixed(rng):
        inputs = [Tensor(_sample(rng, (4, 5)), requires_grad=True)]

        def fn(x):
            return T.dropout(x, 0.4, train=True, rng=np.random.default_rng(777))

        return fn, inputs, None

    def grl(rng):
        lam = 0.7
        inputs = [Tensor(_sample(rng, (3, 4)), requires_grad=True)]

        def fn(x):
            return T.grad_reverse(x, lam)

        return fn, inputs, lambda g: -lam * g

    def bce(rng):
        p = Tensor(rng.uniform(0.05, 0.95, (6,)), requires_grad=True)
        y = (rng.random(6) > 0.5).astype(float)

        def fn(pt):
            return bce_loss(pt, y)

        return fn, [p], None

    def ce(rng):
        logits = Tensor(_sample(rng, (3, 4)), requires_grad=True)
        ids = rng.integers(0, 4, 3)

        def fn(x):
            return softmax_ce_loss(x, ids)

        return fn, [logits], None

    return {
        "add": simple(T.add, (3, 4), (3, 4)),
        "add_broadcast": simple(T.add, (3, 4), (4,)),
        "sub": simple(T.sub, (3, 4), (3, 4)),
        "mul": simple(T.mul, (3, 4), (3, 4)),
        "mul_broadcast": simple(T.mul, (2, 3, 4), (1, 3, 4)),
        "matmul": simple(T.matmul, (3, 4), (4, 2)),
        "matmul_batched": simple(T.matmul, (2, 3, 4), (2, 4, 2)),
        "matmul_shared_rhs": simple(T.matmul, (2, 3, 4), (4, 2)),
        "transpose": simple(lambda x: T.transpose(x, (1, 0)), (3, 4)),
        "transpose_3d": simple(lambda x: T.transpose(x, (0, 2, 1)), (2, 3, 4)),
        "reshape": simple(lambda x: T.reshape(x, (2, 6)), (3, 4)),
        "concat": simple(lambda a, b: T.concat([a, b], axis=1), (3, 2), (3, 3)),
        "index_axis": simple(lambda x: T.index_axis(x, 1, axis=1), (3, 4)),
        "slice_axis": simple(lambda x: T.slice_axis(x, 1, 3, axis=0), (5, 4)),
        "sum_all": simple(T.sum_, (3, 4)),
        "sum_axis0": simple(lambda x: T.sum_(x, axis=0), (3, 4)),
        "mean_all": simple(T.mean_, (3, 4)),
        "mean_axis1_keepdims": simple(lambda x: T.mean_(x, axis=1, keepdims=True), (3, 4)),
        "broadcast_to": simple(lambda x: T.broadcast_to(x, (3, 4)), (1, 4)),
        "scale": simple(lambda x: T.scale(x, -2.5), (3, 4)),
        "relu": simple(T.relu, (3, 4), away=True),
        "gelu": simple(T.gelu, (3, 4), away=True),
        "sigmoid": simple(T.sigmoid, (3, 4)),
        "tanh": simple(T.tanh_, (3, 4)),
        "softmax": simple(T.softmax, (3, 5)),
        "layer_norm": simple(T.layer_norm, (3, 8), (8,), (8,)),
        "depthwise_conv1d": simple(T.depthwise_conv1d, (5, 3), (3, 3)),
        "depthwise_conv1d_batched": simple(T.depthwise_conv1d, (2, 5, 3), (3, 3)),
        "dropout_train": dropout_fixed,
        "grad_reverse": grl,
        "bce_loss": bce,
        "softmax_ce_loss": ce,
        "lstm_sum": simple(lambda x, w, b: T.lstm_sum(x, w, b), (2, 5, 12), (3, 12), (12,)),
        "lstm_sum_reverse": simple(lambda x, w, b: T.lstm_sum(x, w, b, reverse=True),
                                   (2, 5, 12), (3, 12), (12,)),
    }


OP_SPECS = _op_specs()


def check_op(name: str, seed: int) -> GradCheckReport:
    """Run the finite-difference check for one registered op at one seed."""
    rng = np.random.default_rng(seed)
    fn, inputs, grad_map = OP_SPECS[name](rng)
    return grad_check(fn, inputs, name=name, grad_map=grad_map)
