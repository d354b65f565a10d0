"""Short-time framing with a Hamming window."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, EmptyInputError
from .audio import AudioClip

FRAME_MS = 25.0
HOP_MS = 10.0


@dataclass(frozen=True)
class FramePlan:
    """Frame length and hop in samples; window is always Hamming."""

    frame_len: int
    hop: int
    window: str = "hamming"

    def __post_init__(self):
        if not (0 < self.hop <= self.frame_len):
            raise ConfigError(f"need 0 < hop <= frame_len, got hop={self.hop} frame_len={self.frame_len}")
        if self.window != "hamming":
            raise ConfigError(f"unsupported window {self.window!r}")


def default_plan(sample_rate: int) -> FramePlan:
    """25 ms frames with a 10 ms hop."""
    return FramePlan(frame_len=int(round(sample_rate * FRAME_MS / 1000.0)),
                     hop=int(round(sample_rate * HOP_MS / 1000.0)))


def frame_count(n_samples: int, plan: FramePlan) -> int:
    return 1 + (n_samples - plan.frame_len) // plan.hop


def frame_raw(clip: AudioClip, plan: FramePlan) -> np.ndarray:
    """Stack unwindowed frames as a [n_frames, frame_len] matrix."""
    x = clip.samples
    if len(x) < plan.frame_len:
        raise EmptyInputError(
            f"clip of {len(x)} samples shorter than one {plan.frame_len}-sample frame")
    n = frame_count(len(x), plan)
    idx = np.arange(plan.frame_len)[None, :] + plan.hop * np.arange(n)[:, None]
    return x[idx]


def frame_signal(clip: AudioClip, plan: FramePlan) -> np.ndarray:
    """Stack windowed frames as a [n_frames, frame_len] matrix."""
    return frame_raw(clip, plan) * np.hamming(plan.frame_len)[None, :]
