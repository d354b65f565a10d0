"""LPC formant estimation via Levinson-Durbin and polynomial roots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UndefinedFeatureError
from .audio import AudioClip
from .framing import FramePlan, default_plan, frame_raw
from .mfcc import pre_emphasize
from .pitch import VoicingSegmentation

MIN_FORMANT_HZ = 90.0
MAX_BANDWIDTH_HZ = 400.0


def lpc_order(sample_rate: int) -> int:
    return 2 + sample_rate // 1000


def levinson_durbin(r: np.ndarray, order: int) -> np.ndarray | None:
    """Prediction polynomial [1, a1..ap] from autocorrelation r[0..p].

    Returns None when the recursion hits a non-positive prediction error.
    """
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    if err <= 0.0:
        return None
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1 : 0 : -1])
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][: i]
        err *= 1.0 - k * k
        if err <= 0.0:
            return None
    return a


def frame_resonances(frame: np.ndarray, sample_rate: int) -> tuple[np.ndarray, np.ndarray]:
    """Qualifying LPC pole frequencies and bandwidths, ascending by frequency.

    Qualifying means pole angle in (0, pi), frequency above MIN_FORMANT_HZ
    and bandwidth -(sr/pi)*ln|r| below MAX_BANDWIDTH_HZ. Unstable LPC yields
    an empty result.
    """
    order = lpc_order(sample_rate)
    nfft = 1
    while nfft < 2 * len(frame):
        nfft *= 2
    spec = np.fft.rfft(frame, nfft)
    r = np.fft.irfft(spec * np.conj(spec), nfft)[: order + 1]
    r[0] *= 1.0 + 1e-9  # tiny ridge keeps near-singular frames solvable
    a = levinson_durbin(r, order)
    if a is None:
        return np.empty(0), np.empty(0)
    roots = np.roots(a)
    angles = np.angle(roots)
    mags = np.abs(roots)
    keep = (angles > 0.0) & (angles < np.pi) & (mags > 0.0) & (mags < 1.0)
    freqs = angles[keep] * sample_rate / (2.0 * np.pi)
    bws = -(sample_rate / np.pi) * np.log(mags[keep])
    ok = (freqs > MIN_FORMANT_HZ) & (bws < MAX_BANDWIDTH_HZ)
    order_idx = np.argsort(freqs[ok])
    return freqs[ok][order_idx], bws[ok][order_idx]


@dataclass
class FormantStats:
    """Mean/std of F1..F3 and of the F1 bandwidth over voiced frames.

    Each formant is estimated from the frames that expose at least that many
    qualifying resonances, so F1 can be defined while F3 is not; undefined
    slots hold zero and a frame count of zero.
    """

    f1_mean: float = 0.0
    f1_std: float = 0.0
    f2_mean: float = 0.0
    f2_std: float = 0.0
    f3_mean: float = 0.0
    f3_std: float = 0.0
    f1_bw_mean: float = 0.0
    f1_bw_std: float = 0.0
    n_f1: int = 0
    n_f2: int = 0
    n_f3: int = 0

    def as_vector_slice(self) -> np.ndarray:
        return np.array([self.f1_mean, self.f1_std, self.f2_mean, self.f2_std,
                         self.f3_mean, self.f3_std, self.f1_bw_mean, self.f1_bw_std])

    @property
    def complete(self) -> bool:
        return self.n_f3 > 0


def formants(clip: AudioClip, seg: VoicingSegmentation,
             plan: FramePlan | None = None) -> FormantStats:
    """Formant statistics over voiced frames.

    Frames with unstable LPC are skipped. Raises UndefinedFeatureError when
    no voiced frame exposes any qualifying resonance.
    """
    plan = plan or default_plan(clip.sample_rate)
    emphasized = AudioClip(pre_emphasize(clip.samples), clip.sample_rate)
    frames = frame_raw(emphasized, plan) * np.hamming(plan.frame_len)[None, :]
    f1, f2, f3, b1 = [], [], [], []
    for i in np.flatnonzero(seg.frame_flags):
        freqs, bws = frame_resonances(frames[i], clip.sample_rate)
        if freqs.size == 0:
            continue
        f1.append(freqs[0])
        b1.append(bws[0])
        if freqs.size >= 2:
            f2.append(freqs[1])
        if freqs.size >= 3:
            f3.append(freqs[2])
    if not f1:
        raise UndefinedFeatureError("no voiced frame exposed a qualifying resonance")

    def stats(vals):
        arr = np.asarray(vals)
        return (float(arr.mean()), float(arr.std())) if arr.size else (0.0, 0.0)

    s1, s2, s3, sb = stats(f1), stats(f2), stats(f3), stats(b1)
    return FormantStats(f1_mean=s1[0], f1_std=s1[1], f2_mean=s2[0], f2_std=s2[1],
                        f3_mean=s3[0], f3_std=s3[1], f1_bw_mean=sb[0], f1_bw_std=sb[1],
                        n_f1=len(f1), n_f2=len(f2), n_f3=len(f3))
