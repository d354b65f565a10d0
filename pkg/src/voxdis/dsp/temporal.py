"""Temporal rhythm features: loudness peaks, voiced runs, pause counts."""

from __future__ import annotations

import numpy as np

from .pitch import VoicingSegmentation

PEAK_MARGIN_DB = 3.0


def loudness_peak_rate(loudness: np.ndarray, duration_s: float) -> float:
    """Local loudness maxima above median + 3 dB, per second."""
    if len(loudness) < 3 or duration_s <= 0:
        return 0.0
    thresh = np.median(loudness) + PEAK_MARGIN_DB
    mid = loudness[1:-1]
    peaks = (mid > loudness[:-2]) & (mid >= loudness[2:]) & (mid > thresh)
    return float(np.count_nonzero(peaks) / duration_s)


def temporal_features(seg: VoicingSegmentation, loudness: np.ndarray, duration_s: float):
    """(peak rate, voiced-duration mean/std, silence-count mean/std, voicing rate).

    Silence counts are onsets of non-voiced runs per 1-second window,
    averaged across the windows that fit in the clip.
    """
    flags = []
    peak_rate = loudness_peak_rate(loudness, duration_s)

    frame_dt = seg.hop / seg.sample_rate
    voiced_durs = np.asarray([(e - s) * frame_dt for s, e in seg.voiced_runs()])
    if voiced_durs.size:
        voiced_stats = (float(voiced_durs.mean()), float(voiced_durs.std()))
    else:
        voiced_stats = (0.0, 0.0)
        flags.append("voiced_duration")

    onsets = np.asarray([s * frame_dt for s, _ in seg.silence_runs()])
    n_windows = max(1, int(duration_s))
    counts = np.zeros(n_windows)
    for t in onsets:
        w = int(t)
        if w < n_windows:
            counts[w] += 1
    silence_stats = (float(counts.mean()), float(counts.std()))

    total = len(seg.frame_flags)
    voicing_rate = float(np.count_nonzero(seg.frame_flags) / total) if total else 0.0
    return peak_rate, voiced_stats, silence_stats, voicing_rate, flags
