"""Mel-frequency cepstral coefficients (first 30, voiced-frame means)."""

from __future__ import annotations

import numpy as np

from .audio import AudioClip
from .framing import FramePlan, default_plan, frame_raw

N_MFCC = 30
N_MEL_FILTERS = 40
PRE_EMPHASIS = 0.97
LOG_FLOOR = 1e-12


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, nfft: int,
                   n_filters: int = N_MEL_FILTERS,
                   f_lo: float = 0.0, f_hi: float | None = None) -> np.ndarray:
    """Triangular mel filterbank [n_filters, nfft//2 + 1]."""
    f_hi = f_hi if f_hi is not None else sample_rate / 2.0
    mel_pts = np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_filters + 2)
    hz_pts = mel_to_hz(mel_pts)
    freqs = np.arange(nfft // 2 + 1) * sample_rate / nfft
    bank = np.zeros((n_filters, len(freqs)))
    for i in range(n_filters):
        lo, ctr, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        rising = (freqs - lo) / (ctr - lo)
        falling = (hi - freqs) / (hi - ctr)
        bank[i] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def mel_filter_centers(sample_rate: int, n_filters: int = N_MEL_FILTERS,
                       f_lo: float = 0.0, f_hi: float | None = None) -> np.ndarray:
    f_hi = f_hi if f_hi is not None else sample_rate / 2.0
    mel_pts = np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_filters + 2)
    return mel_to_hz(mel_pts[1:-1])


def dct_ii_orthonormal(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II matrix [n_out, n_in]."""
    j = np.arange(n_in)
    k = np.arange(n_out)[:, None]
    mat = np.cos(np.pi * k * (2 * j + 1) / (2 * n_in)) * np.sqrt(2.0 / n_in)
    mat[0] *= np.sqrt(0.5)
    return mat


def pre_emphasize(x: np.ndarray, coeff: float = PRE_EMPHASIS) -> np.ndarray:
    return np.concatenate([x[:1], x[1:] - coeff * x[:-1]])


def log_mel_energies(clip: AudioClip, plan: FramePlan | None = None) -> np.ndarray:
    """Per-frame log mel filterbank energies [n_frames, n_filters]."""
    plan = plan or default_plan(clip.sample_rate)
    emphasized = AudioClip(pre_emphasize(clip.samples), clip.sample_rate)
    frames = frame_raw(emphasized, plan) * np.hamming(plan.frame_len)[None, :]
    nfft = 1
    while nfft < plan.frame_len:
        nfft *= 2
    power = np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2
    bank = mel_filterbank(clip.sample_rate, nfft)
    return np.log(np.maximum(power @ bank.T, LOG_FLOOR))


def mfcc_per_frame(clip: AudioClip, plan: FramePlan | None = None) -> np.ndarray:
    """[n_frames, 30] cepstra: pre-emphasis, power FFT, 40 mel filters, log, DCT-II."""
    logmel = log_mel_energies(clip, plan)
    dct = dct_ii_orthonormal(N_MFCC, logmel.shape[1])
    return logmel @ dct.T


def mfcc_means(clip: AudioClip, voiced_flags: np.ndarray | None = None,
               plan: FramePlan | None = None) -> np.ndarray:
    """Per-coefficient mean of c0..c29 over voiced frames (all frames if none)."""
    coeffs = mfcc_per_frame(clip, plan)
    if voiced_flags is None:
        from .pitch import pitch_track
        _, _, seg = pitch_track(clip, plan)
        voiced_flags = seg.frame_flags
    if np.any(voiced_flags):
        coeffs = coeffs[np.asarray(voiced_flags, dtype=bool)]
    return coeffs.mean(axis=0)
