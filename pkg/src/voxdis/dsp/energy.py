"""Loudness (log-RMS) and harmonics-to-noise ratio."""

from __future__ import annotations

import numpy as np

from .audio import AudioClip
from .framing import FramePlan, default_plan, frame_raw
from .pitch import RMS_EPS, VoicingSegmentation

HNR_MIN_DB = -20.0
HNR_MAX_DB = 60.0


def loudness_track(clip: AudioClip, plan: FramePlan | None = None) -> np.ndarray:
    """Per-frame loudness 20*log10(RMS + eps) in dB."""
    plan = plan or default_plan(clip.sample_rate)
    frames = frame_raw(clip, plan)
    rms = np.sqrt(np.mean(frames * frames, axis=1))
    return 20.0 * np.log10(rms + RMS_EPS)


def hnr_track(strength: np.ndarray, seg: VoicingSegmentation) -> np.ndarray:
    """Per-voiced-frame HNR = 10*log10(r/(1-r)) clamped to [-20, 60] dB.

    r is the refined normalized-autocorrelation value at the pitch lag.
    """
    r = np.clip(strength[seg.frame_flags], 1e-12, 1.0 - 1e-12)
    return np.clip(10.0 * np.log10(r / (1.0 - r)), HNR_MIN_DB, HNR_MAX_DB)


def energy_features(clip: AudioClip, seg: VoicingSegmentation, strength: np.ndarray,
                    plan: FramePlan | None = None):
    """(loudness mean/std over non-silent frames, HNR mean/std over voiced).

    Undefined statistics (all-silent or fully unvoiced clips) come back as
    zeros with the matching flag name in the returned flag list.
    """
    loud = loudness_track(clip, plan)
    flags = []
    if np.any(seg.nonsilent_flags):
        sel = loud[seg.nonsilent_flags]
        loud_stats = (float(sel.mean()), float(sel.std()))
    else:
        loud_stats = (0.0, 0.0)
        flags.append("loudness")
    if np.any(seg.frame_flags):
        h = hnr_track(strength, seg)
        hnr_stats = (float(h.mean()), float(h.std()))
    else:
        hnr_stats = (0.0, 0.0)
        flags.append("hnr")
    return loud_stats, hnr_stats, loud, flags
