"""The 54-dimension multi-domain feature vector and its CSV serialization."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyInputError, FormatError, UndefinedFeatureError
from .audio import AudioClip
from .energy import energy_features
from .formants import formants
from .framing import default_plan
from .mfcc import mfcc_means
from .pitch import pitch_track
from .quality import jitter_shimmer
from .temporal import temporal_features

N_FEATURES = 54
MIN_DURATION_S = 0.5

FEATURE_NAMES = tuple(
    [f"mfcc{i:02d}_mean" for i in range(30)]
    + ["pitch_mean", "pitch_std",
       "jitter_mean", "jitter_std",
       "f1_mean", "f1_std", "f2_mean", "f2_std", "f3_mean", "f3_std",
       "f1_bandwidth_mean", "f1_bandwidth_std",
       "shimmer_mean", "shimmer_std",
       "loudness_mean", "loudness_std",
       "hnr_mean", "hnr_std",
       "loudness_peak_rate",
       "voiced_duration_mean", "voiced_duration_std",
       "silence_count_mean", "silence_count_std",
       "voicing_rate"]
)
assert len(FEATURE_NAMES) == N_FEATURES

FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass
class FeatureVector:
    """Ordered 54-dimension descriptor plus quality flags for undefined slots."""

    values: np.ndarray
    quality_flags: tuple = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (N_FEATURES,):
            raise FormatError(f"feature vector must have shape (54,), got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise FormatError("feature vector contains non-finite entries")


def extract_features(clip: AudioClip) -> FeatureVector:
    """Compose all acoustic analyses into the ordered 54-vector.

    Deterministic for identical input. Undefined features are encoded as 0
    with the feature family recorded in quality_flags.
    """
    if clip.duration < MIN_DURATION_S:
        raise EmptyInputError(f"clip of {clip.duration:.3f} s shorter than {MIN_DURATION_S} s")
    plan = default_plan(clip.sample_rate)
    pitch, strength, seg = pitch_track(clip, plan)
    flags: list[str] = []

    v = np.zeros(N_FEATURES)
    v[0:30] = mfcc_means(clip, seg.frame_flags, plan)

    voiced_pitch = pitch[pitch > 0]
    if voiced_pitch.size:
        v[30], v[31] = voiced_pitch.mean(), voiced_pitch.std()
    else:
        flags.append("pitch")

    try:
        jm, js, sm, ss = jitter_shimmer(clip, pitch, seg)
        v[32], v[33], v[42], v[43] = jm, js, sm, ss
    except UndefinedFeatureError:
        flags.extend(["jitter", "shimmer"])

    try:
        fstats = formants(clip, seg, plan)
        v[34:42] = fstats.as_vector_slice()
        if not fstats.complete:
            flags.append("formants")
    except UndefinedFeatureError:
        flags.append("formants")

    loud_stats, hnr_stats, loud_track, energy_flags = energy_features(clip, seg, strength, plan)
    v[44], v[45] = loud_stats
    v[46], v[47] = hnr_stats
    flags.extend(energy_flags)

    peak_rate, voiced_stats, silence_stats, voicing_rate, temp_flags = temporal_features(
        seg, loud_track, clip.duration)
    v[48] = peak_rate
    v[49], v[50] = voiced_stats
    v[51], v[52] = silence_stats
    v[53] = voicing_rate
    flags.extend(temp_flags)

    return FeatureVector(values=v, quality_flags=tuple(flags))


@dataclass
class FeatureTable:
    """Feature vectors for a set of recordings, aligned with metadata columns."""

    recording_ids: list
    speaker_ids: list
    labels: list                       # int or None per recording
    quality_flags: list                # tuple of str per recording
    matrix: np.ndarray = field(default=None)  # [n, 54]

    def __len__(self):
        return len(self.recording_ids)

    def row(self, recording_id: str) -> np.ndarray:
        return self.matrix[self.recording_ids.index(recording_id)]

    def subset(self, ids) -> "FeatureTable":
        pos = [self.recording_ids.index(r) for r in ids]
        return FeatureTable(
            recording_ids=[self.recording_ids[i] for i in pos],
            speaker_ids=[self.speaker_ids[i] for i in pos],
            labels=[self.labels[i] for i in pos],
            quality_flags=[self.quality_flags[i] for i in pos],
            matrix=self.matrix[pos],
        )


CSV_HEADER = ["recording_id", "speaker_id", "label", "quality_flags"] + [
    f"f{i:03d}" for i in range(N_FEATURES)
]


def write_features_csv(path, table: FeatureTable) -> None:
    """One row per recording; feature values at 9 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for i in range(len(table)):
            label = table.labels[i]
            w.writerow(
                [table.recording_ids[i], table.speaker_ids[i],
                 "" if label is None else str(label),
                 "|".join(table.quality_flags[i])]
                + [f"{x:.9g}" for x in table.matrix[i]]
            )


def read_features_csv(path) -> FeatureTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise FormatError(f"bad feature CSV header in {path}")
    ids, spk, labels, flags, data = [], [], [], [], []
    for row in rows[1:]:
        ids.append(row[0])
        spk.append(row[1])
        labels.append(int(row[2]) if row[2] != "" else None)
        flags.append(tuple(row[3].split("|")) if row[3] else ())
        data.append([float(x) for x in row[4:]])
    return FeatureTable(recording_ids=ids, speaker_ids=spk, labels=labels,
                        quality_flags=flags, matrix=np.asarray(data, dtype=np.float64))
