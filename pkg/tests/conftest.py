"""Shared synthetic test signals."""

import numpy as np
from scipy.signal import lfilter

from voxdis.dsp import AudioClip

SR = 16000


def sawtooth(f0: float, duration: float = 1.0, amp: float = 0.7, sr: int = SR) -> AudioClip:
    t = np.arange(int(duration * sr)) / sr
    return AudioClip(amp * (2.0 * ((f0 * t) % 1.0) - 1.0), sr)


def sine(f0: float, duration: float = 1.0, amp: float = 0.6, sr: int = SR) -> AudioClip:
    t = np.arange(int(duration * sr)) / sr
    return AudioClip(amp * np.sin(2.0 * np.pi * f0 * t), sr)


def white_noise(duration: float = 1.0, amp: float = 0.3, sr: int = SR, seed: int = 0) -> AudioClip:
    rng = np.random.default_rng(seed)
    return AudioClip(np.clip(rng.normal(0.0, amp, int(duration * sr)), -1, 1), sr)


def resonator_coeffs(f: float, bw: float, sr: int = SR):
    r = np.exp(-np.pi * bw / sr)
    theta = 2.0 * np.pi * f / sr
    return [1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r]


def pulse_positions(f0: float, n_samples: int, jitter: float, sr: int, seed: int):
    """Fractional pulse times for a train with uniform +-jitter period noise."""
    rng = np.random.default_rng(seed)
    period = sr / f0
    pos = []
    t = period / 2
    while t < n_samples - 2:
        pos.append(t)
        t += period * (1.0 + jitter * rng.uniform(-1.0, 1.0))
    return np.asarray(pos)


def bandlimited_pulse_train(f0: float, duration: float = 1.0, jitter: float = 0.0,
                            shimmer: float = 0.0, sr: int = SR, seed: int = 0,
                            n_harmonics: int | None = None) -> AudioClip:
    """Sum-of-harmonics pulse train; smooth peaks allow sub-sample marking."""
    n = int(duration * sr)
    rng = np.random.default_rng(seed + 1)
    pos = pulse_positions(f0, n, jitter, sr, seed)
    if n_harmonics is None:
        n_harmonics = min(12, int((sr / 2 - f0) / f0))
    t = np.arange(n)
    x = np.zeros(n)
    # One raised-cosine pulse per mark, width ~ one period
    width = sr / f0 * 0.8
    for p in pos:
        amp = 1.0 + shimmer * rng.uniform(-1.0, 1.0)
        lo = max(0, int(p - width))
        hi = min(n, int(p + width) + 1)
        arg = (t[lo:hi] - p) / width
        x[lo:hi] += amp * (0.5 + 0.5 * np.cos(np.pi * arg)) ** 2
    x = x - x.mean()
    return AudioClip(0.8 * x / np.abs(x).max(), sr)


def resonated_pulse_train(f0: float, resonators, duration: float = 1.0,
                          jitter: float = 0.003, sr: int = SR, seed: int = 3,
                          noise_amp: float = 3e-4) -> AudioClip:
    """Impulse train through a cascade of two-pole resonators plus a noise floor."""
    n = int(duration * sr)
    x = np.zeros(n)
    for p in pulse_positions(f0, n, jitter, sr, seed):
        x[int(round(p))] = 1.0
    for f, bw in resonators:
        b, a = resonator_coeffs(f, bw, sr)
        x = lfilter(b, a, x)
    x = x / np.abs(x).max() * 0.8
    x = x + np.random.default_rng(seed + 100).normal(0.0, noise_amp, n)
    return AudioClip(np.clip(x, -1, 1), sr)
