import numpy as np
import pytest

from voxdis.dsp import AudioClip, pitch_track

from conftest import sawtooth, white_noise


@pytest.mark.parametrize("f0", [120.0, 200.0, 340.0])
def test_sawtooth_pitch_recovery(f0):
    pitch, _, seg = pitch_track(sawtooth(f0, duration=1.0))
    voiced = pitch[pitch > 0]
    assert seg.frame_flags.mean() > 0.9
    assert abs(voiced.mean() - f0) / f0 < 0.015


def test_sawtooth_200_within_3hz():
    pitch, _, seg = pitch_track(sawtooth(200.0, duration=1.0))
    voiced = pitch[pitch > 0]
    assert abs(voiced.mean() - 200.0) < 3.0
    assert seg.frame_flags.mean() > 0.9


def test_white_noise_mostly_unvoiced():
    pitch, _, seg = pitch_track(white_noise(duration=1.0, seed=7))
    assert seg.frame_flags.mean() < 0.2


def test_silence_all_unvoiced():
    pitch, _, seg = pitch_track(AudioClip(np.zeros(16000), 16000))
    assert not np.any(seg.frame_flags)
    assert np.all(pitch == 0.0)


def test_segments_partition_frame_axis():
    clip = sawtooth(150.0, duration=0.6)
    x = np.concatenate([clip.samples, np.zeros(8000), clip.samples])
    _, _, seg = pitch_track(AudioClip(x, 16000))
    covered = 0
    prev_kind = None
    for s, e, kind in seg.segments:
        assert s == covered
        assert kind != prev_kind
        covered = e
        prev_kind = kind
    assert covered == len(seg.frame_flags)
