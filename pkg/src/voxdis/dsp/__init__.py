"""Acoustic feature extraction: audio IO, framing, and the 54-dim descriptor."""

from .audio import TARGET_SAMPLE_RATE, AudioClip, load_wav, resample_linear, save_wav
from .energy import energy_features, hnr_track, loudness_track
from .features import (
    FEATURE_INDEX,
    FEATURE_NAMES,
    N_FEATURES,
    FeatureTable,
    FeatureVector,
    extract_features,
    read_features_csv,
    write_features_csv,
)
from .formants import FormantStats, formants, levinson_durbin
from .framing import FramePlan, default_plan, frame_count, frame_signal
from .mfcc import mel_filter_centers, mel_filterbank, mfcc_means
from .pitch import VoicingSegmentation, pitch_track
from .quality import jitter_shimmer
from .temporal import temporal_features

__all__ = [
    "AudioClip", "TARGET_SAMPLE_RATE", "load_wav", "save_wav", "resample_linear",
    "FramePlan", "default_plan", "frame_signal", "frame_count",
    "mfcc_means", "mel_filterbank", "mel_filter_centers",
    "pitch_track", "VoicingSegmentation",
    "jitter_shimmer", "formants", "FormantStats", "levinson_durbin",
    "energy_features", "loudness_track", "hnr_track",
    "temporal_features",
    "FeatureVector", "FeatureTable", "FEATURE_NAMES", "FEATURE_INDEX", "N_FEATURES",
    "extract_features", "write_features_csv", "read_features_csv",
]
