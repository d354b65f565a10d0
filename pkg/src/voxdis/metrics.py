"""Recall, rank-based AUC and the J-ratio speaker-separability measure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, MetricError, UndefinedMetricError


def recall(tp: int, fn: int) -> float:
    """Proportion of actual positives correctly identified, tp/(tp+fn)."""
    if tp + fn <= 0:
        raise UndefinedMetricError("recall undefined with no positive cases")
    return tp / (tp + fn)


def binary_recalls(scores, labels, threshold: float = 0.5) -> dict:
    """Per-class recall from thresholded scores; class 1 uses score >= threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pred = (scores >= threshold).astype(np.int64)
    out = {}
    for cls in (0, 1):
        mask = labels == cls
        if not mask.any():
            raise UndefinedMetricError(f"recall undefined: class {cls} absent")
        hits = int(np.count_nonzero(pred[mask] == cls))
        out[cls] = recall(hits, int(mask.sum()) - hits)
    return out


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sorted_x = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with average ranks for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = int(np.count_nonzero(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC undefined with a single class present")
    ranks = _average_ranks(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class EmbeddingSet:
    """Embeddings grouped by speaker for scatter-matrix estimation."""

    speaker_ids: list
    vectors: np.ndarray                # [n, d]

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or len(self.speaker_ids) != self.vectors.shape[0]:
            raise EstimationError("embedding matrix and speaker ids misaligned")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def by_speaker(self) -> dict:
        groups: dict = {}
        for sid, vec in zip(self.speaker_ids, self.vectors):
            groups.setdefault(sid, []).append(vec)
        return {sid: np.asarray(rows) for sid, rows in groups.items()}


@dataclass
class ScatterPair:
    s_w: np.ndarray                    # within-speaker scatter, d x d
    s_b: np.ndarray                    # between-speaker scatter, d x d


def scatter(emb: EmbeddingSet) -> ScatterPair:
    """Within/between scatter matrices averaged over speakers.

    S_W = (1/N) sum_i R_i with R_i the biased covariance of speaker i's
    embeddings; S_B = (1/N) sum_i (M_i - M_0)(M_i - M_0)^T with M_0 the
    unweighted mean of speaker means.
    """
    groups = emb.by_speaker()
    if len(groups) < 2:
        raise EstimationError(f"need >= 2 speakers, got {len(groups)}")
    for sid, rows in groups.items():
        if rows.shape[0] < 2:
            raise EstimationError(f"speaker {sid!r} has {rows.shape[0]} embedding(s), need >= 2")
    d = emb.dim
    n_speakers = len(groups)
    s_w = np.zeros((d, d))
    means = []
    for rows in groups.values():
        mu = rows.mean(axis=0)
        centered = rows - mu
        s_w += centered.T @ centered / rows.shape[0]
        means.append(mu)
    s_w /= n_speakers
    means = np.asarray(means)
    m0 = means.mean(axis=0)
    dm = means - m0
    s_b = dm.T @ dm / n_speakers
    return ScatterPair(s_w=s_w, s_b=s_b)


def j_ratio(emb: EmbeddingSet) -> float:
    """trace((S_W + S_B + eps*I)^-1 S_B); higher means more speaker leakage.

    eps = 1e-6 * trace(S_W + S_B)/d, or 1e-12 absolute when the trace is 0.
    """
    pair = scatter(emb)
    d = emb.dim
    total = pair.s_w + pair.s_b
    tr = float(np.trace(total))
    eps = 1e-6 * tr / d if tr > 0.0 else 1e-12
    try:
        solved = np.linalg.solve(total + eps * np.eye(d), pair.s_b)
    except np.linalg.LinAlgError as exc:
        raise MetricError(f"scatter matrix singular even after regularization: {exc}")
    value = float(np.trace(solved))
    if not np.isfinite(value):
        raise MetricError("J-ratio not finite")
    return value
