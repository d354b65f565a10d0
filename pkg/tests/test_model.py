import numpy as np
import pytest

import voxdis.autodiff as ad
from voxdis.autodiff import Tensor, bce_loss, sigmoid, softmax_ce_loss
from voxdis.checkpoint import load_checkpoint, save_checkpoint
from voxdis.errors import ConfigError, FormatError
from voxdis.model import (
    EncoderConfig,
    SeedStream,
    encode_batch,
    head_respiratory,
    head_speaker,
    init_params,
)

TINY = EncoderConfig(d_model=8, n_blocks=1, n_heads=2, lstm_hidden=8, embed_dim=8)


def small_model(seed=0, n_speakers=5):
    return init_params(TINY, n_classes=1, n_speakers=n_speakers, seed=seed)


def test_config_validation():
    with pytest.raises(ConfigError):
        EncoderConfig(d_model=30, n_heads=4)
    with pytest.raises(ConfigError):
        EncoderConfig(dw_kernel=4)
    with pytest.raises(ConfigError):
        EncoderConfig(lstm_hidden=0)


def test_embedding_shape_and_determinism():
    mp = small_model()
    rng = np.random.default_rng(0)
    X = rng.normal(0, 1, (3, 54))
    a = encode_batch(mp, X)
    b = encode_batch(mp, X)
    assert a.data.shape == (3, TINY.embed_dim)
    assert np.all(np.isfinite(a.data))
    assert np.array_equal(a.data, b.data)


def test_nonfinite_input_rejected():
    mp = small_model()
    X = np.zeros((1, 54))
    X[0, 3] = np.nan
    with pytest.raises(FormatError):
        encode_batch(mp, X)


def test_position_permutation_changes_embedding():
    mp = small_model()
    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, (1, 54))
    swapped = x.copy()
    swapped[0, [2, 40]] = swapped[0, [40, 2]]
    a = encode_batch(mp, x).data
    b = encode_batch(mp, swapped).data
    assert np.linalg.norm(a - b) > 0


def test_heads_disjoint_and_eval_deterministic():
    mp = small_model()
    names = set(mp.params)
    res = {n for n in names if n.startswith("head_res")}
    spk = {n for n in names if n.startswith("head_spk")}
    assert res and spk and not (res & spk)
    emb = encode_batch(mp, np.random.default_rng(2).normal(0, 1, (2, 54)))
    a = head_respiratory(mp, emb).data
    b = head_respiratory(mp, emb).data
    assert np.array_equal(a, b)


def test_zero_embedding_zero_weights_gives_bias():
    mp = small_model()
    for k in ("head_res.w1", "head_res.w2", "head_res.w3"):
        mp.params[k].data[:] = 0.0
    mp.params["head_res.b3"].data[:] = 0.37
    emb = Tensor(np.zeros((2, TINY.embed_dim)))
    logits = head_respiratory(mp, emb)
    assert np.allclose(logits.data, 0.37)


def test_speaker_head_forward_ignores_lambda():
    mp = small_model()
    emb = encode_batch(mp, np.random.default_rng(3).normal(0, 1, (2, 54)))
    plain = head_speaker(mp, emb, lam=None).data
    for lam in (0.0, 0.3, 7.0):
        assert np.array_equal(head_speaker(mp, emb, lam=lam).data, plain)


def _encoder_grads_from_speaker_loss(mp, X, spk_ids, lam):
    for p in mp.params.values():
        p.grad = None
    emb = encode_batch(mp, X)
    logits = head_speaker(mp, emb, lam=lam)
    loss = softmax_ce_loss(logits, spk_ids)
    loss.backward()
    return {k: (None if p.grad is None else p.grad.copy())
            for k, p in mp.params.items() if not k.startswith("head_")}


def test_grl_negates_encoder_gradient():
    mp = small_model()
    rng = np.random.default_rng(4)
    X = rng.normal(0, 1, (4, 54))
    ids = rng.integers(0, 5, 4)
    with_grl = _encoder_grads_from_speaker_loss(mp, X, ids, lam=1.0)
    without = _encoder_grads_from_speaker_loss(mp, X, ids, lam=None)
    for k, g in with_grl.items():
        assert g is not None
        assert np.max(np.abs(g + without[k])) <= 1e-12, k


def test_grl_lambda_zero_blocks_encoder():
    mp = small_model()
    rng = np.random.default_rng(5)
    X = rng.normal(0, 1, (4, 54))
    ids = rng.integers(0, 5, 4)
    grads = _encoder_grads_from_speaker_loss(mp, X, ids, lam=0.0)
    for k, g in grads.items():
        assert g is None or np.all(g == 0.0), k


def test_gradient_flow_separation():
    mp = small_model()
    rng = np.random.default_rng(6)
    X = rng.normal(0, 1, (4, 54))
    y = rng.integers(0, 2, 4).astype(float)
    ids = rng.integers(0, 5, 4)
    lam = 0.25

    def grads_of(loss_builder):
        for p in mp.params.values():
            p.grad = None
        loss_builder().backward()
        return {k: (None if p.grad is None else p.grad.copy()) for k, p in mp.params.items()}

    def res_loss():
        emb = encode_batch(mp, X)
        return bce_loss(ad.reshape(sigmoid(head_respiratory(mp, emb)), (4,)), y)

    def spk_loss():
        emb = encode_batch(mp, X)
        return softmax_ce_loss(head_speaker(mp, emb, lam=lam), ids)

    def joint_loss():
        emb = encode_batch(mp, X)
        l_res = bce_loss(ad.reshape(sigmoid(head_respiratory(mp, emb)), (4,)), y)
        l_spk = softmax_ce_loss(head_speaker(mp, emb, lam=lam), ids)
        return ad.add(l_res, l_spk)

    g_res = grads_of(res_loss)
    g_spk = grads_of(spk_loss)
    g_joint = grads_of(joint_loss)

    for k in mp.params:
        if k.startswith("head_res"):
            assert g_spk[k] is None            # respiratory head untouched by L_spk
        elif k.startswith("head_spk"):
            assert g_res[k] is None            # speaker head untouched by L_res
        else:
            # encoder sees both, and the joint gradient is their sum (the
            # speaker side already carries the -lambda factor via the GRL)
            assert np.max(np.abs(g_joint[k] - (g_res[k] + g_spk[k]))) < 1e-12


def test_end_to_end_finite_difference():
    # Width-reduced model; check d(sum(w*emb))/d(input) and a parameter
    # subsample against central differences.
    mp = small_model(seed=3)
    rng = np.random.default_rng(7)
    X = rng.normal(0, 1, (2, 54))
    w = rng.normal(0, 1, (2, TINY.embed_dim))
    step = 1e-5

    def forward_value():
        return float(np.sum(encode_batch(mp, X).data * w))

    for p in mp.params.values():
        p.grad = None
    emb = encode_batch(mp, X)
    loss = ad.sum_(ad.mul(emb, Tensor(w)))
    loss.backward()

    worst = 0.0
    for name in ("embed.scale", "block0.attn.wq", "block0.leff.dw",
                 "lstm.f.wh", "lstm.b.wx", "pool.w"):
        p = mp.params[name]
        flat = p.data.reshape(-1)
        idx = rng.choice(flat.size, size=min(6, flat.size), replace=False)
        for j in idx:
            orig = flat[j]
            flat[j] = orig + step
            fp = forward_value()
            flat[j] = orig - step
            fm = forward_value()
            flat[j] = orig
            numeric = (fp - fm) / (2 * step)
            analytic = p.grad.reshape(-1)[j]
            rel = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
            worst = max(worst, rel)
    assert worst < 1e-3


def test_checkpoint_round_trip(tmp_path):
    mp = small_model(seed=11)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, mp, extra={"task": "status", "lambda": 0.01})
    assert path.read_bytes()[:8] == b"VOXDIS01"
    back, extra = load_checkpoint(path)
    assert extra["task"] == "status"
    assert back.config == mp.config
    assert back.n_speakers == mp.n_speakers
    rng = np.random.default_rng(12)
    for _ in range(10):
        X = rng.normal(0, 1, (10, 54))
        a = head_respiratory(mp, encode_batch(mp, X)).data
        b = head_respiratory(back, encode_batch(back, X)).data
        assert np.array_equal(a, b)


def test_dropout_mean_preserved_monte_carlo():
    # Train-mode dropout keeps the expected activation close to eval mode.
    mp = small_model(seed=4)
    emb = encode_batch(mp, np.random.default_rng(9).normal(0, 1, (1, 54)))
    h_eval = ad.relu(ad.add(ad.matmul(emb, mp.params["head_res.w1"]),
                            mp.params["head_res.b1"])).data
    acc = np.zeros_like(h_eval)
    n = 4000
    for i in range(n):
        stream = SeedStream(123, i)
        h = ad.relu(ad.add(ad.matmul(emb, mp.params["head_res.w1"]),
                           mp.params["head_res.b1"]))
        h = ad.dropout(h, 0.5, train=True, rng=stream.next())
        acc += h.data
    mean = acc / n
    scale = np.abs(h_eval).max()
    assert np.max(np.abs(mean - h_eval)) / scale < 0.05
