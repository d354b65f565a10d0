"""Shared encoder (locally-enhanced transformer blocks + BiLSTM) and the two
classifier heads (condition head; speaker head behind gradient reversal)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    Adam,
    Tensor,
    add,
    concat,
    depthwise_conv1d,
    dropout,
    gelu,
    grad_reverse,
    layer_norm,
    lstm_sum,
    matmul,
    mul,
    relu,
    reshape,
    rng_for,
    scale,
    softmax,
    transpose,
)
from .dsp.features import N_FEATURES
from .errors import ConfigError, FormatError

SEQ_LEN = N_FEATURES
HEAD_HIDDEN = (64, 32)
HEAD_DROPOUT = 0.5


@dataclass(frozen=True)
class EncoderConfig:
    d_model: int = 32
    n_blocks: int = 2
    n_heads: int = 2
    leff_expand: int = 4
    dw_kernel: int = 3
    lstm_hidden: int = 128
    embed_dim: int = 64
    dropout_enc: float = 0.1

    def __post_init__(self):
        dims = (self.d_model, self.n_blocks, self.n_heads, self.leff_expand,
                self.dw_kernel, self.lstm_hidden, self.embed_dim)
        if any(d <= 0 for d in dims):
            raise ConfigError(f"encoder dims must be positive: {self}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.dw_kernel % 2 == 0:
            raise ConfigError(f"depthwise kernel must be odd, got {self.dw_kernel}")
        if not 0.0 <= self.dropout_enc < 1.0:
            raise ConfigError(f"dropout_enc must be in [0, 1), got {self.dropout_enc}")


@dataclass
class ModelParams:
    """Named parameter tensors for encoder plus both heads.

    The heads share no parameters; both consume the same embed_dim-vector
    produced by the encoder.
    """

    config: EncoderConfig
    n_classes: int
    n_speakers: int
    params: dict = field(default_factory=dict)

    def data_snapshot(self) -> dict:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_snapshot(self, snapshot: dict) -> None:
        for k, p in self.params.items():
            p.data = snapshot[k].copy()

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p.data)) for p in self.params.values())


class SeedStream:
    """Hands out one counter-based generator per dropout layer."""

    def __init__(self, *key: int):
        self.key = tuple(int(k) for k in key)
        self.counter = 0

    def next(self) -> np.random.Generator:
        self.counter += 1
        return rng_for(*self.key, self.counter)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def init_params(config: EncoderConfig, n_classes: int, n_speakers: int,
                seed: int) -> ModelParams:
    """Deterministic Glorot initialization keyed by seed."""
    rng = rng_for(seed, 0xB007)
    d = config.d_model
    hid = config.lstm_hidden
    exp = d * config.leff_expand
    p: dict[str, np.ndarray] = {}
    p["embed.scale"] = _glorot(rng, 1, d, (SEQ_LEN, d))
    p["embed.pos"] = rng.normal(0.0, 0.02, (SEQ_LEN, d))
    for i in range(config.n_blocks):
        b = f"block{i}"
        for t in ("q", "k", "v", "o"):
            p[f"{b}.attn.w{t}"] = _glorot(rng, d, d, (d, d))
            p[f"{b}.attn.b{t}"] = np.zeros(d)
        p[f"{b}.ln1.g"] = np.ones(d)
        p[f"{b}.ln1.b"] = np.zeros(d)
        p[f"{b}.leff.w1"] = _glorot(rng, d, exp, (d, exp))
        p[f"{b}.leff.b1"] = np.zeros(exp)
        p[f"{b}.leff.dw"] = _glorot(rng, config.dw_kernel, 1, (config.dw_kernel, exp))
        p[f"{b}.leff.w2"] = _glorot(rng, exp, d, (exp, d))
        p[f"{b}.leff.b2"] = np.zeros(d)
        p[f"{b}.ln2.g"] = np.ones(d)
        p[f"{b}.ln2.b"] = np.zeros(d)
    for direction in ("f", "b"):
        p[f"lstm.{direction}.wx"] = _glorot(rng, d, 4 * hid, (d, 4 * hid))
        p[f"lstm.{direction}.wh"] = _glorot(rng, hid, 4 * hid, (hid, 4 * hid))
        bias = np.zeros(4 * hid)
        bias[hid : 2 * hid] = 1.0  # forget-gate bias
        p[f"lstm.{direction}.b"] = bias
    p["pool.w"] = _glorot(rng, 2 * hid, config.embed_dim, (2 * hid, config.embed_dim))
    p["pool.b"] = np.zeros(config.embed_dim)
    for head, n_out in (("head_res", n_classes), ("head_spk", n_speakers)):
        h1, h2 = HEAD_HIDDEN
        p[f"{head}.w1"] = _glorot(rng, config.embed_dim, h1, (config.embed_dim, h1))
        p[f"{head}.b1"] = np.zeros(h1)
        p[f"{head}.w2"] = _glorot(rng, h1, h2, (h1, h2))
        p[f"{head}.b2"] = np.zeros(h2)
        p[f"{head}.w3"] = _glorot(rng, h2, n_out, (h2, n_out))
        p[f"{head}.b3"] = np.zeros(n_out)
    tensors = {k: Tensor(v, requires_grad=True) for k, v in p.items()}
    return ModelParams(config=config, n_classes=n_classes, n_speakers=n_speakers,
                       params=tensors)


def _attention(h, P, prefix: str, cfg: EncoderConfig):
    b, s, d = h.data.shape
    heads = cfg.n_heads
    dh = d // heads
    ln = layer_norm(h, P[f"{prefix}.ln1.g"], P[f"{prefix}.ln1.b"])

    def project(tag):
        t = add(matmul(ln, P[f"{prefix}.attn.w{tag}"]), P[f"{prefix}.attn.b{tag}"])
        return transpose(reshape(t, (b, s, heads, dh)), (0, 2, 1, 3))

    q, k, v = project("q"), project("k"), project("v")
    scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
    ctx = matmul(softmax(scores), v)
    merged = reshape(transpose(ctx, (0, 2, 1, 3)), (b, s, d))
    out = add(matmul(merged, P[f"{prefix}.attn.wo"]), P[f"{prefix}.attn.bo"])
    return add(h, out)


def _leff(h, P, prefix: str, cfg: EncoderConfig, train: bool, stream: SeedStream | None):
    ln = layer_norm(h, P[f"{prefix}.ln2.g"], P[f"{prefix}.ln2.b"])
    e = add(matmul(ln, P[f"{prefix}.leff.w1"]), P[f"{prefix}.leff.b1"])
    c = depthwise_conv1d(e, P[f"{prefix}.leff.dw"])
    g = gelu(c)
    g = dropout(g, cfg.dropout_enc, train, stream.next() if train and stream else None)
    out = add(matmul(g, P[f"{prefix}.leff.w2"]), P[f"{prefix}.leff.b2"])
    return add(h, out)


def _lstm_direction(h, P, prefix: str, hid: int, reverse: bool):
    x_proj = matmul(h, P[f"{prefix}.wx"])          # [b, s, 4*hid]
    return lstm_sum(x_proj, P[f"{prefix}.wh"], P[f"{prefix}.b"], reverse=reverse)


def encode_batch(mp: ModelParams, features: np.ndarray, train: bool = False,
                 stream: SeedStream | None = None) -> Tensor:
    """Embed a [batch, 54] feature matrix into [batch, embed_dim].

    Pipeline: per-position scalar projection + positional embedding, then
    pre-norm attention/LeFF blocks, a bidirectional LSTM over the 54
    positions, mean pooling and a linear map to the embedding.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != SEQ_LEN:
        raise FormatError(f"expected [batch, {SEQ_LEN}] features, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise FormatError("non-finite feature values")
    cfg = mp.config
    P = mp.params
    b = X.shape[0]
    x = reshape(Tensor(X), (b, SEQ_LEN, 1))
    h = add(mul(x, P["embed.scale"]), P["embed.pos"])
    for i in range(cfg.n_blocks):
        h = _attention(h, P, f"block{i}", cfg)
        h = _leff(h, P, f"block{i}", cfg, train, stream)
    fwd = _lstm_direction(h, P, "lstm.f", cfg.lstm_hidden, reverse=False)
    bwd = _lstm_direction(h, P, "lstm.b", cfg.lstm_hidden, reverse=True)
    pooled = scale(concat([fwd, bwd], axis=-1), 1.0 / SEQ_LEN)
    return add(matmul(pooled, P["pool.w"]), P["pool.b"])


def _head(mp: ModelParams, emb: Tensor, head: str, train: bool,
          stream: SeedStream | None) -> Tensor:
    P = mp.params
    h = relu(add(matmul(emb, P[f"{head}.w1"]), P[f"{head}.b1"]))
    h = dropout(h, HEAD_DROPOUT, train, stream.next() if train and stream else None)
    h = relu(add(matmul(h, P[f"{head}.w2"]), P[f"{head}.b2"]))
    h = dropout(h, HEAD_DROPOUT, train, stream.next() if train and stream else None)
    return add(matmul(h, P[f"{head}.w3"]), P[f"{head}.b3"])


def head_respiratory(mp: ModelParams, emb: Tensor, train: bool = False,
                     stream: SeedStream | None = None) -> Tensor:
    """Condition logits [batch, n_classes] from the shared embedding."""
    return _head(mp, emb, "head_res", train, stream)


def head_speaker(mp: ModelParams, emb: Tensor, lam: float | None,
                 train: bool = False, stream: SeedStream | None = None) -> Tensor:
    """Speaker logits [batch, n_speakers]; lam=None bypasses the reversal
    layer, any float inserts grad_reverse(emb, lam) before the head."""
    h = emb if lam is None else grad_reverse(emb, lam)
    return _head(mp, h, "head_spk", train, stream)


def encode(mp: ModelParams, features, train: bool = False, seed: int = 0,
           step: int = 0) -> np.ndarray:
    """Single-recording embedding as a plain length-embed_dim vector."""
    stream = SeedStream(seed, step) if train else None
    return encode_batch(mp, np.asarray(features, dtype=np.float64).reshape(1, -1),
                        train, stream).data[0]


def make_optimizer(mp: ModelParams, lr: float = 1e-3) -> Adam:
    return Adam(mp.params, lr=lr)
