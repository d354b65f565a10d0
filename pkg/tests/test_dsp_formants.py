import numpy as np
import pytest

from voxdis.dsp import AudioClip, formants, pitch_track
from voxdis.errors import UndefinedFeatureError

from conftest import resonated_pulse_train

TRIPLE = [(700.0, 80.0), (1220.0, 100.0), (2600.0, 150.0)]


def test_single_resonator_f1():
    clip = resonated_pulse_train(120.0, [(700.0, 80.0)])
    _, _, seg = pitch_track(clip)
    stats = formants(clip, seg)
    assert abs(stats.f1_mean - 700.0) < 50.0
    assert stats.n_f1 > 0


def test_triple_resonator_ordering():
    clip = resonated_pulse_train(120.0, TRIPLE)
    _, _, seg = pitch_track(clip)
    stats = formants(clip, seg)
    assert stats.complete
    assert stats.f1_mean < stats.f2_mean < stats.f3_mean
    assert abs(stats.f1_mean - 700.0) < 50.0
    assert abs(stats.f2_mean - 1220.0) < 80.0
    assert abs(stats.f3_mean - 2600.0) < 120.0


def test_resonator_scaling():
    base = resonated_pulse_train(120.0, TRIPLE)
    scaled = resonated_pulse_train(120.0, [(f * 1.1, bw) for f, bw in TRIPLE])
    _, _, seg_b = pitch_track(base)
    _, _, seg_s = pitch_track(scaled)
    sb = formants(base, seg_b)
    ss = formants(scaled, seg_s)
    for fb, fs in [(sb.f1_mean, ss.f1_mean), (sb.f2_mean, ss.f2_mean), (sb.f3_mean, ss.f3_mean)]:
        assert abs(fs / fb - 1.1) / 1.1 < 0.07


def test_no_qualifying_roots_raises():
    # A pure 50 Hz sine resonates below the 90 Hz formant floor, so no root
    # qualifies in any frame even with voicing forced on.
    sr = 16000
    t = np.arange(sr // 2) / sr
    clip = AudioClip(0.5 * np.sin(2 * np.pi * 50.0 * t), sr)
    _, _, seg = pitch_track(clip)
    seg.frame_flags[:] = True
    with pytest.raises(UndefinedFeatureError):
        formants(clip, seg)
