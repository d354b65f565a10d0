import numpy as np

from voxdis.dsp import AudioClip, mel_filter_centers, mfcc_means
from voxdis.dsp.mfcc import dct_ii_orthonormal, log_mel_energies

from conftest import sine


def test_dct_orthonormal():
    mat = dct_ii_orthonormal(40, 40)
    assert np.max(np.abs(mat @ mat.T - np.eye(40))) < 1e-10


def test_1khz_tone_maximizes_nearest_mel_filter():
    # Oracle: locate the filter whose center frequency is nearest 1 kHz
    # analytically, then check the filterbank response peaks there.
    centers = mel_filter_centers(16000)
    expected = int(np.argmin(np.abs(centers - 1000.0)))
    clip = sine(1000.0, duration=1.0)
    logmel = log_mel_energies(clip)
    argmax_per_frame = np.argmax(logmel, axis=1)
    assert np.all(argmax_per_frame == expected)


def test_gain_shifts_only_c0():
    base = sine(220.0, duration=1.0, amp=0.3)
    doubled = AudioClip(base.samples * 2.0, base.sample_rate)
    c_base = mfcc_means(base)
    c_doub = mfcc_means(doubled)
    # log power scales by log(4); orthonormal DCT maps a constant shift of
    # the 40 log-energies into c0 only, by sqrt(40)*log(4).
    expected_shift = np.sqrt(40.0) * np.log(4.0)
    assert abs((c_doub[0] - c_base[0]) - expected_shift) < 1e-6
    assert np.max(np.abs(c_doub[1:] - c_base[1:])) < 1e-9


def test_mfcc_means_shape_and_determinism():
    clip = sine(150.0, duration=0.8)
    a = mfcc_means(clip)
    b = mfcc_means(clip)
    assert a.shape == (30,)
    assert np.array_equal(a, b)
