"""Audio loading, normalization and resampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from ..errors import EmptyInputError, FormatError

TARGET_SAMPLE_RATE = 16000


@dataclass
class AudioClip:
    """Mono PCM samples in [-1, 1] plus recording metadata."""

    samples: np.ndarray
    sample_rate: int
    id: str = ""
    speaker_id: str = ""
    label: int | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate <= 0:
            raise FormatError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _to_mono_unit(data: np.ndarray) -> np.ndarray:
    """Average channels and scale integer PCM to [-1, 1]."""
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        x = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise FormatError(f"unsupported WAV sample format {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    return x


def resample_linear(x: np.ndarray, sr_in: int, sr_out: int) -> np.ndarray:
    """Resample by linear interpolation onto a uniform sr_out grid."""
    if sr_in == sr_out:
        return x
    n_out = int(round(len(x) * sr_out / sr_in))
    t_in = np.arange(len(x)) / sr_in
    t_out = np.arange(n_out) / sr_out
    return np.interp(t_out, t_in, x)


def load_wav(path, id: str = "", speaker_id: str = "", label: int | None = None) -> AudioClip:
    """Load a RIFF/WAVE file as a mono 16 kHz AudioClip.

    Channels are averaged, samples scaled to [-1, 1], and the signal is
    linearly resampled to 16 kHz when the source rate differs.
    """
    try:
        sr, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise FormatError(f"cannot parse WAV file {path}: {exc}") from exc
    if data.size == 0:
        raise EmptyInputError(f"WAV file {path} has an empty payload")
    x = _to_mono_unit(data)
    x = resample_linear(x, int(sr), TARGET_SAMPLE_RATE)
    return AudioClip(samples=x, sample_rate=TARGET_SAMPLE_RATE,
                     id=id, speaker_id=speaker_id, label=label)


def save_wav(path, clip: AudioClip) -> None:
    """Write a clip as 16-bit PCM."""
    pcm = np.clip(clip.samples, -1.0, 1.0)
    wavfile.write(path, clip.sample_rate, (pcm * 32767.0).astype(np.int16))
