"""Autocorrelation pitch tracking and voiced/silence segmentation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip
from .framing import FramePlan, default_plan, frame_raw

PITCH_MIN_HZ = 60.0
PITCH_MAX_HZ = 500.0
VOICING_THRESHOLD = 0.45
# Silence floor: 40 dB below clip peak, but never below -60 dBFS.
SILENCE_REL_DB = -40.0
SILENCE_ABS_DB = -60.0
RMS_EPS = 1e-10


@dataclass
class VoicingSegmentation:
    """Per-frame voicing flags plus maximal runs of voiced / non-voiced frames.

    Non-voiced runs are labelled "silence"; they cover both true pauses and
    unvoiced sound, which is what the temporal pause statistics count.
    """

    frame_flags: np.ndarray            # bool, voiced?
    segments: list                     # (start_frame, end_frame_exclusive, kind)
    nonsilent_flags: np.ndarray        # bool, frame RMS above the silence floor
    hop: int
    sample_rate: int

    def voiced_runs(self):
        return [(s, e) for s, e, k in self.segments if k == "voiced"]

    def silence_runs(self):
        return [(s, e) for s, e, k in self.segments if k == "silence"]


def _runs_from_flags(flags: np.ndarray) -> list:
    segments = []
    n = len(flags)
    start = 0
    for i in range(1, n + 1):
        if i == n or flags[i] != flags[start]:
            segments.append((start, i, "voiced" if flags[start] else "silence"))
            start = i
    return segments


def _parabolic_peak(y_prev: float, y0: float, y_next: float) -> tuple[float, float]:
    """Vertex offset in [-0.5, 0.5] and value of the parabola through 3 points."""
    denom = y_prev - 2.0 * y0 + y_next
    if denom >= 0.0 or abs(denom) < 1e-30:
        return 0.0, y0
    delta = 0.5 * (y_prev - y_next) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    value = y0 - 0.25 * (y_prev - y_next) * delta
    return delta, value


def normalized_autocorr(frames: np.ndarray, max_lag: int) -> np.ndarray:
    """NCCF r[frame, lag] for lags 0..max_lag over raw frames.

    r(t) = sum x[n] x[n+t] / sqrt(sum_{n<N-t} x^2 * sum_{n>=t} x^2).
    """
    n_frames, flen = frames.shape
    nfft = 1
    while nfft < 2 * flen:
        nfft *= 2
    spec = np.fft.rfft(frames, nfft, axis=1)
    acf = np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, : max_lag + 1]
    sq = np.cumsum(frames * frames, axis=1)
    total = sq[:, -1]
    lags = np.arange(max_lag + 1)
    head = sq[:, flen - 1 - lags]                        # energy of x[0 : N-t]
    tail = total[:, None] - np.concatenate(
        [np.zeros((n_frames, 1)), sq[:, lags[1:] - 1]], axis=1)  # energy of x[t : N]
    denom = np.sqrt(np.maximum(head * tail, 0.0))
    return acf / np.maximum(denom, 1e-30)


def pitch_track(clip: AudioClip, plan: FramePlan | None = None):
    """Per-frame pitch in Hz (0 when unvoiced) plus the voicing segmentation.

    A frame is voiced when the parabolic-refined NCCF peak in the 60-500 Hz
    lag band reaches the voicing threshold and the frame is not silent.
    """
    plan = plan or default_plan(clip.sample_rate)
    frames = frame_raw(clip, plan)
    n_frames = frames.shape[0]
    sr = clip.sample_rate

    lag_min = max(2, int(sr / PITCH_MAX_HZ))
    lag_max = min(plan.frame_len - 2, int(np.ceil(sr / PITCH_MIN_HZ)))
    r = normalized_autocorr(frames, lag_max + 1)

    rms = np.sqrt(np.mean(frames * frames, axis=1))
    peak = float(np.max(np.abs(clip.samples))) if clip.samples.size else 0.0
    peak_db = 20.0 * np.log10(peak + RMS_EPS)
    floor_db = max(peak_db + SILENCE_REL_DB, SILENCE_ABS_DB)
    nonsilent = 20.0 * np.log10(rms + RMS_EPS) > floor_db

    pitch = np.zeros(n_frames)
    strength = np.zeros(n_frames)
    for i in range(n_frames):
        band = r[i, lag_min : lag_max + 1]
        # Local maxima; prefer the shortest lag among peaks close to the best
        # one to avoid octave-down errors on strongly periodic frames.
        interior = (band[1:-1] >= band[:-2]) & (band[1:-1] > band[2:])
        peaks = np.flatnonzero(interior) + 1
        if peaks.size == 0:
            continue
        best = peaks[np.argmax(band[peaks])]
        r_best = band[best]
        if r_best > 0.0:
            sel = int(peaks[band[peaks] >= 0.85 * r_best][0])
        else:
            sel = int(best)
        lag = lag_min + sel
        delta, r_ref = _parabolic_peak(r[i, lag - 1], r[i, lag], r[i, lag + 1])
        strength[i] = min(r_ref, 1.0 - 1e-12)
        if strength[i] >= VOICING_THRESHOLD and nonsilent[i]:
            pitch[i] = sr / (lag + delta)

    voiced = pitch > 0.0
    seg = VoicingSegmentation(frame_flags=voiced,
                              segments=_runs_from_flags(voiced),
                              nonsilent_flags=nonsilent,
                              hop=plan.hop,
                              sample_rate=sr)
    return pitch, strength, seg
