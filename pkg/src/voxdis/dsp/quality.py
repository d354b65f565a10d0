"""Cycle-level perturbation measures: jitter and shimmer."""

from __future__ import annotations

import numpy as np

from ..errors import UndefinedFeatureError
from .audio import AudioClip
from .pitch import VoicingSegmentation, _parabolic_peak

MIN_PERIODS = 3          # periods needed before a segment contributes
# Next mark searched within +-15% of the local period: wide enough for
# physiological jitter, narrow enough that the window never spans two
# resonance ring peaks of a short-period (high-pitch) voice.
SEARCH_BAND = 0.15


def _refine_mark(x: np.ndarray, idx: int) -> tuple[float, float]:
    """Sub-sample peak position and amplitude around integer index idx."""
    if 0 < idx < len(x) - 1:
        delta, value = _parabolic_peak(x[idx - 1], x[idx], x[idx + 1])
        return idx + delta, abs(value)
    return float(idx), abs(x[idx])


def period_marks(x: np.ndarray, start: int, stop: int,
                 period_of: np.ndarray, hop: int,
                 median_period: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Glottal-cycle marks (fractional sample positions) and peak amplitudes.

    Marks are picked as the per-cycle maximum of the waveform inside
    [start, stop); period_of gives the local period estimate (samples) for
    the frame containing each position, clamped near median_period so a
    single octave-error frame cannot make the search skip cycles.
    """
    seg = x[start:stop]
    if seg.size == 0:
        return np.empty(0), np.empty(0)

    def local_period(pos: int) -> float:
        f = min(len(period_of) - 1, max(0, pos // hop))
        t = period_of[f]
        if median_period is not None:
            t = float(np.clip(t, 0.75 * median_period, 1.33 * median_period))
        return t

    t0 = local_period(start)
    first_win = seg[: min(len(seg), int(round(t0 * (1 + SEARCH_BAND))))]
    cur = int(np.argmax(first_win))
    positions, amplitudes = [], []
    pos, amp = _refine_mark(seg, cur)
    positions.append(pos)
    amplitudes.append(amp)
    while True:
        t = local_period(start + cur)
        lo = cur + int(np.floor(t * (1 - SEARCH_BAND)))
        hi = cur + int(np.ceil(t * (1 + SEARCH_BAND))) + 1
        if lo >= len(seg) - 1:
            break
        hi = min(hi, len(seg))
        if hi - lo < 2:
            break
        nxt = lo + int(np.argmax(seg[lo:hi]))
        pos, amp = _refine_mark(seg, nxt)
        positions.append(pos)
        amplitudes.append(amp)
        cur = nxt
    return np.asarray(positions) + start, np.asarray(amplitudes)


def jitter_shimmer(clip: AudioClip, pitch: np.ndarray, seg: VoicingSegmentation):
    """(jitter mean, jitter std, shimmer mean, shimmer std) across voiced segments.

    Per segment: local jitter = mean|T_i - T_{i-1}| / mean(T) over consecutive
    cycle lengths; local shimmer is the analogous ratio on per-cycle peak
    amplitudes. Raises UndefinedFeatureError when no voiced run holds at
    least MIN_PERIODS consecutive periods.
    """
    sr = clip.sample_rate
    hop = seg.hop
    period_of = np.where(pitch > 0, sr / np.maximum(pitch, 1e-6), sr / 150.0)
    voiced_pitch = pitch[pitch > 0]
    # clip-level median pitch anchors every run's period search, so a run
    # that locked onto an octave cannot poison its own sanity bound
    med_period = sr / np.median(voiced_pitch) if voiced_pitch.size else None
    jitters, shimmers = [], []
    for s, e in seg.voiced_runs():
        start = s * hop
        stop = min(len(clip.samples), (e - 1) * hop + hop)  # hop-spaced cover
        stop = min(len(clip.samples), max(stop, (e - 1) * hop + int(period_of[s] * 2)))
        marks, amps = period_marks(clip.samples, start, stop, period_of, hop, med_period)
        if len(marks) < MIN_PERIODS + 1:
            continue
        periods = np.diff(marks)
        med = np.median(periods) if med_period is None else med_period
        if med <= 0:
            continue
        # Cycles off the local median by >30% are tracking breaks, not
        # perturbation; exclude them from the statistics.
        valid = np.abs(periods - med) <= 0.3 * med
        pair_ok = valid[:-1] & valid[1:]
        if valid.sum() < MIN_PERIODS or pair_ok.sum() < MIN_PERIODS - 1:
            continue
        diffs = np.abs(np.diff(periods))[pair_ok]
        jitters.append(diffs.mean() / periods[valid].mean())
        amp_sel = amps[:-1][valid]
        if amp_sel.size and amp_sel.mean() > 0:
            # one amplitude diff per cycle, gated by that cycle's validity
            amp_diffs = np.abs(np.diff(amps))[valid]
            shimmers.append(amp_diffs.mean() / amp_sel.mean())
    if not jitters:
        raise UndefinedFeatureError("no voiced run with enough consecutive periods")
    jit = np.asarray(jitters)
    shi = np.asarray(shimmers) if shimmers else np.zeros(1)
    return float(jit.mean()), float(jit.std()), float(shi.mean()), float(shi.std())
