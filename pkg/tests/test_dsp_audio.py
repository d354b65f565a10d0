import numpy as np
import pytest
from scipy.io import wavfile

from voxdis.dsp import AudioClip, frame_count, frame_signal, load_wav
from voxdis.dsp.framing import FramePlan
from voxdis.errors import ConfigError, EmptyInputError, FormatError


def test_load_zeros_16k_mono(tmp_path):
    path = tmp_path / "z.wav"
    wavfile.write(path, 16000, np.zeros(16000, dtype=np.int16))
    clip = load_wav(path)
    assert len(clip.samples) == 16000
    assert np.all(clip.samples == 0.0)
    assert clip.sample_rate == 16000


def test_load_resamples_48k(tmp_path):
    path = tmp_path / "hi.wav"
    t = np.arange(48000) / 48000
    wavfile.write(path, 48000, (0.5 * np.sin(2 * np.pi * 440 * t)).astype(np.float32))
    clip = load_wav(path)
    assert len(clip.samples) == 16000


def test_load_stereo_cancellation(tmp_path):
    path = tmp_path / "st.wav"
    x = (np.random.default_rng(0).normal(0, 0.2, 8000)).astype(np.float32)
    wavfile.write(path, 16000, np.stack([x, -x], axis=1))
    clip = load_wav(path)
    assert np.max(np.abs(clip.samples)) < 1e-9


def test_load_int16_scaling(tmp_path):
    path = tmp_path / "i.wav"
    wavfile.write(path, 16000, np.full(4000, 16384, dtype=np.int16))
    clip = load_wav(path)
    assert np.allclose(clip.samples, 0.5)
    assert np.max(np.abs(clip.samples)) <= 1.0


def test_load_malformed_header(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"RIFFgarbage-that-is-not-wave-data")
    with pytest.raises(FormatError):
        load_wav(path)


def test_load_empty_payload(tmp_path):
    path = tmp_path / "e.wav"
    wavfile.write(path, 16000, np.zeros(0, dtype=np.int16))
    with pytest.raises(EmptyInputError):
        load_wav(path)


def test_frame_counts():
    plan = FramePlan(frame_len=400, hop=160)
    assert frame_count(400, plan) == 1
    assert frame_count(560, plan) == 2
    clip = AudioClip(np.zeros(560), 16000)
    assert frame_signal(clip, plan).shape == (2, 400)


def test_frame_count_formula_property():
    rng = np.random.default_rng(1)
    for _ in range(50):
        frame_len = int(rng.integers(2, 500))
        hop = int(rng.integers(1, frame_len + 1))
        n = int(rng.integers(frame_len, 4000))
        plan = FramePlan(frame_len=frame_len, hop=hop)
        frames = frame_signal(AudioClip(np.zeros(n), 16000), plan)
        assert frames.shape[0] == 1 + (n - frame_len) // hop


def test_frame_window_identity():
    plan = FramePlan(frame_len=128, hop=64)
    clip = AudioClip(np.ones(256), 16000)
    frames = frame_signal(clip, plan)
    assert np.allclose(frames, np.hamming(128)[None, :])


def test_frame_too_short():
    plan = FramePlan(frame_len=400, hop=160)
    with pytest.raises(EmptyInputError):
        frame_signal(AudioClip(np.zeros(399), 16000), plan)


def test_frame_plan_validation():
    with pytest.raises(ConfigError):
        FramePlan(frame_len=100, hop=0)
    with pytest.raises(ConfigError):
        FramePlan(frame_len=100, hop=101)
