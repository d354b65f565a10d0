"""Reverse-mode automatic differentiation on float64 numpy buffers."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError

GELU_C = np.sqrt(2.0 / np.pi)


def _f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


class Tensor:
    """Value node in the computation graph.

    data and grad are float64 numpy arrays of identical shape; parents and a
    backward closure record how the node was produced. The graph is acyclic
    and backward() visits each node exactly once in reverse topological
    order, summing contributions when a tensor feeds several consumers.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False,
                 parents: tuple = (), backward=None, op: str = "leaf"):
        self.data = _f64(data)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def backward(self, seed=None):
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited and p.requires_grad:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data) if seed is None else _f64(seed)
        for node in reversed(topo):
            if node._backward is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._backward(node.grad)):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: incompatible shapes {a.shape} vs {b.shape}")
    return Tensor(out, parents=(a, b), op="add",
                  backward=lambda g: (_unbroadcast(g, a.data.shape),
                                      _unbroadcast(g, b.data.shape)))


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub: incompatible shapes {a.shape} vs {b.shape}")
    return Tensor(out, parents=(a, b), op="sub",
                  backward=lambda g: (_unbroadcast(g, a.data.shape),
                                      _unbroadcast(-g, b.data.shape)))


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: incompatible shapes {a.shape} vs {b.shape}")
    return Tensor(out, parents=(a, b), op="mul",
                  backward=lambda g: (_unbroadcast(g * b.data, a.data.shape),
                                      _unbroadcast(g * a.data, b.data.shape)))


def scale(a, s: float) -> Tensor:
    a = _wrap(a)
    s = float(s)
    return Tensor(a.data * s, parents=(a,), op="scale",
                  backward=lambda g: (g * s,))


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul needs >=2-d operands, got {a.shape} and {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} vs {b.shape}")

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return Tensor(out, parents=(a, b), op="matmul", backward=backward)


def transpose(a, axes=None) -> Tensor:
    a = _wrap(a)
    axes = tuple(axes) if axes is not None else tuple(range(a.data.ndim))[::-1]
    inverse = tuple(np.argsort(axes))
    return Tensor(np.transpose(a.data, axes), parents=(a,), op="transpose",
                  backward=lambda g: (np.transpose(g, inverse),))


def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    orig = a.data.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {orig} as {shape}")
    return Tensor(out, parents=(a,), op="reshape",
                  backward=lambda g: (g.reshape(orig),))


def broadcast_to(a, shape) -> Tensor:
    a = _wrap(a)
    try:
        out = np.broadcast_to(a.data, shape).copy()
    except ValueError:
        raise ShapeError(f"broadcast_to: cannot broadcast {a.shape} to {shape}")
    return Tensor(out, parents=(a,), op="broadcast",
                  backward=lambda g: (_unbroadcast(g, a.data.shape),))


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis)
                     for i in range(len(tensors)))

    return Tensor(out, parents=tuple(tensors), op="concat", backward=backward)


def index_axis(a, index: int, axis: int) -> Tensor:
    """Select one index along an axis, removing that axis."""
    a = _wrap(a)

    def backward(g):
        z = np.zeros_like(a.data)
        sl = [slice(None)] * a.data.ndim
        sl[axis] = index
        z[tuple(sl)] = g
        return (z,)

    return Tensor(np.take(a.data, index, axis=axis), parents=(a,), op="index", backward=backward)


def slice_axis(a, start: int, stop: int, axis: int = -1) -> Tensor:
    a = _wrap(a)
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, stop)
    sl = tuple(sl)

    def backward(g):
        z = np.zeros_like(a.data)
        z[sl] = g
        return (z,)

    return Tensor(a.data[sl], parents=(a,), op="slice", backward=backward)


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gx = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gx, a.data.shape).copy(),)

    return Tensor(a.data.sum(axis=axis, keepdims=keepdims),
                  parents=(a,), op="sum", backward=backward)


def mean_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)
    n = a.data.size if axis is None else a.data.shape[axis]

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g / n, a.data.shape).copy(),)
        gx = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gx / n, a.data.shape).copy(),)

    return Tensor(a.data.mean(axis=axis, keepdims=keepdims),
                  parents=(a,), op="mean", backward=backward)


def relu(a) -> Tensor:
    a = _wrap(a)
    mask = a.data > 0
    return Tensor(np.where(mask, a.data, 0.0), parents=(a,), op="relu",
                  backward=lambda g: (g * mask,))


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    s = 1.0 / (1.0 + np.exp(-a.data))
    return Tensor(s, parents=(a,), op="sigmoid",
                  backward=lambda g: (g * s * (1.0 - s),))


def tanh_(a) -> Tensor:
    a = _wrap(a)
    t = np.tanh(a.data)
    return Tensor(t, parents=(a,), op="tanh",
                  backward=lambda g: (g * (1.0 - t * t),))


def gelu(a) -> Tensor:
    """GELU via the tanh approximation; the gradient differentiates the
    approximation itself."""
    a = _wrap(a)
    x = a.data
    x2 = x * x
    t = np.tanh(GELU_C * (x + 0.044715 * x2 * x))

    def backward(g):
        d_inner = GELU_C * (1.0 + 3.0 * 0.044715 * x2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

    return Tensor(0.5 * x * (1.0 + t), parents=(a,), op="gelu", backward=backward)


def softmax(a) -> Tensor:
    """Numerically stable softmax over the last axis."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    return Tensor(y, parents=(a,), op="softmax",
                  backward=lambda g: (y * (g - (g * y).sum(axis=-1, keepdims=True)),))


def layer_norm(a, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Layer normalization over the last axis with learned scale and shift."""
    a, gamma, beta = _wrap(a), _wrap(gamma), _wrap(beta)
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gamma.data + beta.data
    n = a.data.shape[-1]

    def backward(g):
        gg = g * gamma.data
        gx = inv * (gg - gg.mean(axis=-1, keepdims=True)
                    - xhat * (gg * xhat).mean(axis=-1, keepdims=True))
        dgamma = _unbroadcast(g * xhat, gamma.data.shape)
        dbeta = _unbroadcast(g, beta.data.shape)
        return gx, dgamma, dbeta

    return Tensor(out, parents=(a, gamma, beta), op="layer_norm", backward=backward)


def dropout(a, rate: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; identity (the same tensor) in evaluation mode."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    a = _wrap(a)
    if not train or rate == 0.0:
        return a
    if rng is None:
        raise ConfigError("training-mode dropout needs a seeded Generator")
    keep = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    return Tensor(a.data * keep, parents=(a,), op="dropout",
                  backward=lambda g: (g * keep,))


def depthwise_conv1d(x, kernel) -> Tensor:
    """Per-channel 1-D convolution along the second-to-last axis.

    x: [..., seq, channels]; kernel: [k, channels] with odd k; zero padding
    (k-1)/2 on both sides keeps the output length equal to the input length.
    """
    x, kernel = _wrap(x), _wrap(kernel)
    k, ch = kernel.data.shape
    if k % 2 == 0:
        raise ConfigError(f"depthwise kernel width must be odd, got {k}")
    if x.data.shape[-1] != ch:
        raise ShapeError(f"depthwise_conv1d: {x.shape} has {x.data.shape[-1]} channels, "
                         f"kernel {kernel.shape} has {ch}")
    pad = (k - 1) // 2
    seq = x.data.shape[-2]
    pad_spec = [(0, 0)] * (x.data.ndim - 2) + [(pad, pad), (0, 0)]
    xp = np.pad(x.data, pad_spec)
    out = np.zeros_like(x.data)
    for j in range(k):
        out += xp[..., j : j + seq, :] * kernel.data[j]

    def backward(g):
        gp = np.pad(g, pad_spec)
        gx = np.zeros_like(x.data)
        for j in range(k):
            gx += gp[..., (k - 1 - j) : (k - 1 - j) + seq, :] * kernel.data[j]
        gk = np.empty_like(kernel.data)
        lead = tuple(range(g.ndim - 1))
        for j in range(k):
            gk[j] = (g * xp[..., j : j + seq, :]).sum(axis=lead)
        return gx, gk

    return Tensor(out, parents=(x, kernel), op="depthwise_conv1d", backward=backward)


def grad_reverse(x, lam: float) -> Tensor:
    """Identity forward; backward multiplies the incoming gradient by -lam."""
    x = _wrap(x)
    lam = float(lam)
    if lam < 0:
        raise ConfigError(f"gradient-reversal lambda must be >= 0, got {lam}")
    return Tensor(x.data, parents=(x,), op="grad_reverse",
                  backward=lambda g: (g * (-lam),))


def lstm_sum(x_proj, wh, bias, reverse: bool = False) -> Tensor:
    """Run an LSTM over pre-projected inputs and return the sum of hidden
    states across time, as one fused node with hand-derived BPTT.

    x_proj: [batch, seq, 4*hid] (input @ Wx); wh: [hid, 4*hid]; bias: [4*hid]
    with gate order (input, forget, cell, output). reverse=True iterates the
    sequence back-to-front. Fusing the recurrence keeps the graph small and
    avoids per-step scatter allocations.
    """
    x_proj, wh, bias = _wrap(x_proj), _wrap(wh), _wrap(bias)
    b, s, four_h = x_proj.data.shape
    hid = wh.data.shape[0]
    if four_h != 4 * hid or wh.data.shape != (hid, 4 * hid) or bias.data.shape != (4 * hid,):
        raise ShapeError(f"lstm_sum: x_proj {x_proj.shape}, wh {wh.shape}, bias {bias.shape}")
    order = range(s - 1, -1, -1) if reverse else range(s)
    xb = x_proj.data + bias.data          # bias folded in once for all steps
    whd = wh.data
    h_t = np.zeros((b, hid))
    c_t = np.zeros((b, hid))
    acc = np.zeros((b, hid))
    cache = []
    for t in order:
        a = xb[:, t, :] + h_t @ whd
        sig = 1.0 / (1.0 + np.exp(-a))    # one exp; g-gate columns replaced below
        i = sig[:, :hid]
        f = sig[:, hid : 2 * hid]
        g = np.tanh(a[:, 2 * hid : 3 * hid])
        o = sig[:, 3 * hid :]
        c_prev = c_t
        c_t = f * c_prev + i * g
        tanh_c = np.tanh(c_t)
        h_prev = h_t
        h_t = o * tanh_c
        acc += h_t
        cache.append((t, i, f, g, o, c_prev, tanh_c, h_prev))

    def backward(grad_sum):
        dx = np.empty_like(xb)
        h_stack = np.empty((s, b, hid))
        wht = whd.T
        dh_next = np.zeros((b, hid))
        dc_next = np.zeros((b, hid))
        for pos, (t, i, f, g, o, c_prev, tanh_c, h_prev) in enumerate(reversed(cache)):
            dh = grad_sum + dh_next
            do = dh * tanh_c
            dc = dh * o * (1.0 - tanh_c * tanh_c) + dc_next
            dc_next = dc * f
            da = dx[:, t, :]
            da[:, :hid] = dc * g * i * (1.0 - i)
            da[:, hid : 2 * hid] = dc * c_prev * f * (1.0 - f)
            da[:, 2 * hid : 3 * hid] = dc * i * (1.0 - g * g)
            da[:, 3 * hid :] = do * o * (1.0 - o)
            h_stack[pos] = h_prev
            dh_next = da @ wht
        # dWh = sum_t h_prev_t^T @ da_t as one GEMM over the stacked steps
        da_stack = dx[:, [t for t, *_ in reversed(cache)], :].swapaxes(0, 1)
        dwh = h_stack.reshape(s * b, hid).T @ da_stack.reshape(s * b, 4 * hid)
        db = dx.sum(axis=(0, 1))
        return dx, dwh, db

    return Tensor(acc, parents=(x_proj, wh, bias), op="lstm_sum", backward=backward)
