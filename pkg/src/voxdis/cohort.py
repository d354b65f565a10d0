"""Synthetic speaker-confounded cohorts: audio and direct-feature modes.

Speakers carry latent voice traits (pitch, vocal-tract scale, noisiness);
pathology states add controllable perturbation effects on top. The confound
knob sets how strongly speaker identity predicts the label, which is the
shortcut a disentangled classifier must not take.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .autodiff import rng_for
from .dsp.audio import AudioClip
from .dsp.features import FEATURE_INDEX, N_FEATURES, FeatureVector
from .errors import ConfigError, FormatError

SAMPLE_RATE = 16000

STATE_STABLE = "stable"
STATE_ASTHMA = "asthma_exac"
STATE_COPD = "copd_exac"

TASK_STATUS = "status"                 # stable (0) vs exacerbated (1)
TASK_EXACTYPE = "exactype"             # asthma exacerbation (0) vs COPD exacerbation (1)
TASKS = (TASK_STATUS, TASK_EXACTYPE)

FORMANT_BASES = (700.0, 1220.0, 2600.0)
FORMANT_BANDWIDTHS = (80.0, 100.0, 150.0)
BASE_JITTER = 0.006                    # relative period perturbation, stable voice
BASE_SHIMMER = 0.04
BASE_PAUSE_RATE = 0.3                  # silence gaps per second, stable voice


@dataclass(frozen=True)
class SpeakerLatent:
    base_pitch: float                  # Hz
    formant_scale: float
    base_hnr: float                    # dB
    base_rate: float                   # loudness-peak rate offset, Hz


CANONICAL_LATENT = SpeakerLatent(base_pitch=185.0, formant_scale=1.0,
                                 base_hnr=22.0, base_rate=0.0)


def draw_latent(rng: np.random.Generator) -> SpeakerLatent:
    # Narrow HNR spread keeps speaker identity mostly in pitch/formant/rate
    # dimensions, which a disentangled model can drop without losing the
    # pathology signal that also lives in the noise floor.
    return SpeakerLatent(
        base_pitch=float(rng.uniform(110.0, 260.0)),
        formant_scale=float(rng.uniform(0.85, 1.15)),
        base_hnr=float(rng.uniform(19.0, 26.0)),
        base_rate=float(rng.uniform(-0.5, 0.5)),
    )


@dataclass(frozen=True)
class PathologyProfile:
    state: str
    jitter_boost: float = 0.0          # relative increase of period perturbation
    pause_boost: float = 0.0           # extra silence gaps per second
    hnr_drop: float = 0.0              # dB
    f1_bandwidth_boost: float = 0.0    # Hz


PROFILES = {
    STATE_STABLE: PathologyProfile(STATE_STABLE),
    STATE_ASTHMA: PathologyProfile(STATE_ASTHMA, jitter_boost=0.12, pause_boost=0.18,
                                   hnr_drop=0.7, f1_bandwidth_boost=20.0),
    STATE_COPD: PathologyProfile(STATE_COPD, jitter_boost=0.25, pause_boost=0.32,
                                 hnr_drop=1.2, f1_bandwidth_boost=38.0),
}
assert PROFILES[STATE_COPD].jitter_boost > PROFILES[STATE_ASTHMA].jitter_boost


def state_label(state: str, task: str) -> int:
    if task == TASK_STATUS:
        return 0 if state == STATE_STABLE else 1
    if task == TASK_EXACTYPE:
        return {STATE_ASTHMA: 0, STATE_COPD: 1}[state]
    raise ConfigError(f"unknown task {task!r}")


@dataclass(frozen=True)
class RecordingSpec:
    recording_id: str
    speaker_id: str
    state: str
    label: int
    seed: int
    split_hint: str = ""


@dataclass
class CohortManifest:
    task: str
    confound: float
    seed: int
    speakers: dict                      # speaker_id -> SpeakerLatent
    recordings: list                    # of RecordingSpec

    def records(self):
        """(recording_id, speaker_id, label) triples for split construction."""
        return [(r.recording_id, r.speaker_id, r.label) for r in self.recordings]

    def with_split_hints(self, hints: dict) -> "CohortManifest":
        recs = [replace(r, split_hint=hints.get(r.recording_id, "")) for r in self.recordings]
        return CohortManifest(self.task, self.confound, self.seed, dict(self.speakers), recs)


def make_cohort(n_speakers: int, recordings_per_speaker: int, confound: float,
                task: str, seed: int) -> CohortManifest:
    """Assign states so that each speaker keeps one dominant state with
    probability `confound` per recording, and labels stay balanced."""
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    if n_speakers < 6:
        raise ConfigError(f"need at least 6 speakers, got {n_speakers}")
    if recordings_per_speaker < 1:
        raise ConfigError("need at least 1 recording per speaker")
    if not 0.0 <= confound <= 1.0:
        raise ConfigError(f"confound must lie in [0, 1], got {confound}")

    rng = rng_for(seed, 1)
    speakers = {f"spk{idx:03d}": draw_latent(rng) for idx in range(n_speakers)}

    def random_state(r: np.random.Generator) -> str:
        if task == TASK_EXACTYPE:
            return STATE_ASTHMA if r.random() < 0.5 else STATE_COPD
        if r.random() < 0.5:
            return STATE_STABLE
        return STATE_ASTHMA if r.random() < 0.5 else STATE_COPD

    recordings = []
    rec_index = 0
    for s_idx, speaker_id in enumerate(speakers):
        # Round-robin dominant states keep the cohort balanced by design.
        if task == TASK_EXACTYPE:
            dominant = (STATE_ASTHMA, STATE_COPD)[s_idx % 2]
        else:
            dominant = (STATE_STABLE, STATE_ASTHMA, STATE_STABLE, STATE_COPD)[s_idx % 4]
        for _ in range(recordings_per_speaker):
            state = dominant if rng.random() < confound else random_state(rng)
            recordings.append(RecordingSpec(
                recording_id=f"rec{rec_index:05d}",
                speaker_id=speaker_id,
                state=state,
                label=state_label(state, task),
                seed=int(rng.integers(0, 2**31 - 1)),
            ))
            rec_index += 1
    manifest = CohortManifest(task=task, confound=confound, seed=seed,
                              speakers=speakers, recordings=recordings)
    labels = np.array([r.label for r in recordings])
    balance = labels.mean()
    if not 0.25 <= balance <= 0.75:
        raise ConfigError(f"class balance infeasible: positive fraction {balance:.2f}")
    return manifest


def speaker_normalize(manifest: CohortManifest) -> CohortManifest:
    """Replace every latent with the canonical one; the generator-level
    analog of converting all recordings to a single target voice."""
    return CohortManifest(
        task=manifest.task,
        confound=manifest.confound,
        seed=manifest.seed,
        speakers={sid: CANONICAL_LATENT for sid in manifest.speakers},
        recordings=list(manifest.recordings),
    )


def _resonator_coeffs(freq: float, bw: float, sr: int):
    r = np.exp(-np.pi * bw / sr)
    theta = 2.0 * np.pi * freq / sr
    return [1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r]


def _insert_silence_gaps(x: np.ndarray, rate: float, duration: float,
                         rng: np.random.Generator, sr: int) -> np.ndarray:
    n_gaps = int(rng.poisson(rate * duration))
    if n_gaps <= 0:
        return x
    n = len(x)
    edge = int(0.010 * sr)
    gate = np.ones(n)
    placed = []
    attempts = 0
    while len(placed) < n_gaps and attempts < n_gaps * 20:
        attempts += 1
        gap_len = int(rng.uniform(0.2, 0.5) * sr)
        start = int(rng.uniform(0.05, 0.95) * (n - gap_len))
        if any(start < e + edge and s < start + gap_len + edge for s, e in placed):
            continue
        placed.append((start, start + gap_len))
        ramp = 0.5 * (1.0 + np.cos(np.linspace(0.0, np.pi, edge)))
        gate[start : start + edge] = np.minimum(gate[start : start + edge], ramp)
        gate[start + edge : start + gap_len - edge] = 0.0
        gate[start + gap_len - edge : start + gap_len] = np.minimum(
            gate[start + gap_len - edge : start + gap_len], ramp[::-1])
    return x * gate


def synth_audio(latent: SpeakerLatent, profile: PathologyProfile,
                duration: float, seed: int) -> AudioClip:
    """Glottal pulse train -> resonator cascade -> noise floor -> pauses.

    Per-period jitter scales with the profile's jitter_boost, the F1
    bandwidth widens by f1_bandwidth_boost, additive noise pins the
    harmonics-to-noise ratio near base_hnr - hnr_drop, and silence gaps
    appear at BASE_PAUSE_RATE + pause_boost per second.
    """
    if duration < 1.0:
        raise ConfigError(f"duration must be >= 1 s, got {duration}")
    sr = SAMPLE_RATE
    rng = rng_for(seed, 2)
    n = int(duration * sr)

    # Session-to-session drift: small per-recording wobble of the latent,
    # identical for profile twins sharing a seed, so paired pathology
    # contrasts cancel it while single recordings stay realistically noisy.
    pitch = latent.base_pitch * (1.0 + 0.03 * rng.normal())
    formant_scale = latent.formant_scale * (1.0 + 0.02 * rng.normal())
    base_hnr = latent.base_hnr + 1.0 * rng.normal()

    sigma_j = BASE_JITTER * (1.0 + profile.jitter_boost)
    period = sr / pitch
    x = np.zeros(n)
    t = period / 2.0
    while t < n - 2:
        amp = 1.0 + BASE_SHIMMER * rng.uniform(-1.0, 1.0)
        x[int(round(t))] = amp
        t += period * (1.0 + sigma_j * rng.uniform(-1.0, 1.0))

    bandwidths = (FORMANT_BANDWIDTHS[0] + profile.f1_bandwidth_boost,) + FORMANT_BANDWIDTHS[1:]
    for freq, bw in zip(FORMANT_BASES, bandwidths):
        b, a = _resonator_coeffs(freq * formant_scale, bw, sr)
        x = lfilter(b, a, x)

    am_rate = 2.5 + latent.base_rate
    tt = np.arange(n) / sr
    x = x * (1.0 + 0.25 * np.sin(2.0 * np.pi * am_rate * tt + rng.uniform(0, 2 * np.pi)))

    target_hnr = base_hnr - profile.hnr_drop
    p_sig = float(np.mean(x * x))
    noise_std = np.sqrt(p_sig / (10.0 ** (target_hnr / 10.0)))
    x = x + rng.normal(0.0, noise_std, n)

    x = _insert_silence_gaps(x, BASE_PAUSE_RATE + profile.pause_boost, duration, rng, sr)
    peak = np.abs(x).max()
    if peak > 0:
        x = 0.95 * x / peak
    return AudioClip(samples=x, sample_rate=sr)


def synth_cohort_audio(manifest: CohortManifest, duration: float = 2.5) -> list:
    """All clips for a manifest, metadata attached, deterministic per seed."""
    clips = []
    for rec in manifest.recordings:
        clip = synth_audio(manifest.speakers[rec.speaker_id],
                           PROFILES[rec.state], duration, rec.seed)
        clip.id = rec.recording_id
        clip.speaker_id = rec.speaker_id
        clip.label = rec.label
        clips.append(clip)
    return clips


# Feature-mode generation: a documented affine map from (latent, profile)
# to the 54-dim mean, plus diagonal Gaussian noise. Speaker identity enters
# only through pitch (and optionally formant) coordinates; the asthma/COPD
# contrast enters only through jitter and HNR coordinates; stable-vs-
# exacerbated also moves the pause/voicing block, identically for both
# exacerbation types.
SPEAKER_CODING_PITCH_FORMANT = "pitch_formant"
SPEAKER_CODING_PITCH_ONLY = "pitch_only"

_BASELINE = np.zeros(N_FEATURES)
_BASELINE[0:30] = np.linspace(-40.0, 2.0, 30)          # plausible cepstral means
_NOISE = np.full(N_FEATURES, 0.5)


def _set(vec, name, value):
    vec[FEATURE_INDEX[name]] = value


_FEATURE_MEANS_STATIC = {
    "f1_std": 40.0, "f2_std": 60.0, "f3_std": 90.0,
    "f1_bandwidth_std": 25.0,
    "shimmer_mean": 0.05, "shimmer_std": 0.015,
    "loudness_mean": -22.0, "loudness_std": 4.0,
    "hnr_std": 3.0,
    "loudness_peak_rate": 3.0,
    "voiced_duration_mean": 1.2, "voiced_duration_std": 0.4,
    "silence_count_std": 0.4,
    "jitter_std": 0.004,
    "pitch_std": 0.0,                                   # overwritten per speaker
}

_FEATURE_NOISE = {
    "pitch_mean": 2.5, "pitch_std": 0.6,
    "jitter_mean": 0.0015, "jitter_std": 0.0008,
    "f1_mean": 10.0, "f2_mean": 14.0, "f3_mean": 20.0,
    "f1_std": 6.0, "f2_std": 8.0, "f3_std": 10.0,
    "f1_bandwidth_mean": 10.0, "f1_bandwidth_std": 5.0,
    "shimmer_mean": 0.01, "shimmer_std": 0.004,
    "loudness_mean": 1.5, "loudness_std": 0.6,
    "hnr_mean": 1.2, "hnr_std": 0.5,
    "loudness_peak_rate": 0.4,
    "voiced_duration_mean": 0.25, "voiced_duration_std": 0.12,
    "silence_count_mean": 0.18, "silence_count_std": 0.12,
    "voicing_rate": 0.02,
}
for _name, _sigma in _FEATURE_NOISE.items():
    _NOISE[FEATURE_INDEX[_name]] = _sigma


def feature_mean(latent: SpeakerLatent, profile: PathologyProfile,
                 speaker_coding: str = SPEAKER_CODING_PITCH_FORMANT) -> np.ndarray:
    mu = _BASELINE.copy()
    for name, value in _FEATURE_MEANS_STATIC.items():
        _set(mu, name, value)
    _set(mu, "pitch_mean", latent.base_pitch)
    _set(mu, "pitch_std", 4.0 + 0.08 * (latent.base_pitch - 110.0))
    if speaker_coding == SPEAKER_CODING_PITCH_FORMANT:
        scale = latent.formant_scale
    elif speaker_coding == SPEAKER_CODING_PITCH_ONLY:
        scale = 1.0
    else:
        raise ConfigError(f"unknown speaker coding {speaker_coding!r}")
    for base, name in zip(FORMANT_BASES, ("f1_mean", "f2_mean", "f3_mean")):
        _set(mu, name, base * scale)
    exacerbated = profile.state != STATE_STABLE
    _set(mu, "jitter_mean", 0.008 * (1.0 + profile.jitter_boost))
    _set(mu, "hnr_mean", 22.0 - profile.hnr_drop)
    _set(mu, "f1_bandwidth_mean", 80.0 + (90.0 if exacerbated else 0.0))
    _set(mu, "silence_count_mean", BASE_PAUSE_RATE + (0.6 if exacerbated else 0.0))
    _set(mu, "voicing_rate", 0.85 - (0.08 if exacerbated else 0.0))
    return mu


def synth_features(latent: SpeakerLatent, profile: PathologyProfile, seed: int,
                   noise_scale: float = 1.0,
                   speaker_coding: str = SPEAKER_CODING_PITCH_FORMANT) -> FeatureVector:
    """Sample the 54-vector from the documented affine mean plus noise."""
    mu = feature_mean(latent, profile, speaker_coding)
    rng = rng_for(seed, 3)
    values = mu + noise_scale * _NOISE * rng.normal(0.0, 1.0, N_FEATURES)
    return FeatureVector(values=values)


def synth_cohort_features(manifest: CohortManifest, noise_scale: float = 1.0,
                          speaker_coding: str = SPEAKER_CODING_PITCH_FORMANT):
    """FeatureTable-ready arrays for a manifest in direct-feature mode."""
    from .dsp.features import FeatureTable

    rows = []
    for rec in manifest.recordings:
        fv = synth_features(manifest.speakers[rec.speaker_id], PROFILES[rec.state],
                            rec.seed, noise_scale, speaker_coding)
        rows.append(fv.values)
    return FeatureTable(
        recording_ids=[r.recording_id for r in manifest.recordings],
        speaker_ids=[r.speaker_id for r in manifest.recordings],
        labels=[r.label for r in manifest.recordings],
        quality_flags=[() for _ in manifest.recordings],
        matrix=np.asarray(rows),
    )


MANIFEST_HEADER = ["recording_id", "speaker_id", "state", "label", "split_hint", "seed"]


def write_manifest_csv(path, manifest: CohortManifest) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MANIFEST_HEADER)
        for r in manifest.recordings:
            w.writerow([r.recording_id, r.speaker_id, r.state, r.label,
                        r.split_hint, r.seed])


def read_manifest_csv(path, task: str = TASK_STATUS, confound: float = -1.0,
                      seed: int = -1) -> CohortManifest:
    """Rehydrate recording rows; latents are not stored in the CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != MANIFEST_HEADER:
        raise FormatError(f"bad manifest header in {path}")
    recordings = [RecordingSpec(recording_id=r[0], speaker_id=r[1], state=r[2],
                                label=int(r[3]), split_hint=r[4], seed=int(r[5]))
                  for r in rows[1:]]
    speakers = {r.speaker_id: CANONICAL_LATENT for r in recordings}
    return CohortManifest(task=task, confound=confound, seed=seed,
                          speakers=speakers, recordings=recordings)
