"""Adversarial training loop, dataset splits, and feature standardization.

The logged total objective is L_total = L_res - lambda * L_spk; the backward
pass runs on L_res + L_spk with the reversal layer inside the speaker branch
supplying the -lambda coupling, so the speaker head still learns to classify
speakers while the encoder unlearns them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

import voxdis.autodiff as ad
from .autodiff import Adam, bce_loss, rng_for, sigmoid, softmax_ce_loss
from .dsp.features import FeatureTable
from .errors import ConfigError, EstimationError, SplitError, TrainingError
from .metrics import EmbeddingSet, auc, binary_recalls, j_ratio
from .model import (
    EncoderConfig,
    ModelParams,
    SeedStream,
    encode_batch,
    head_respiratory,
    head_speaker,
    init_params,
)

STRATEGY_PROPORTION = "proportion"      # stratified by label, 20% test
STRATEGY_SUBJECT = "subject"            # no speaker crosses split boundaries
STRATEGIES = (STRATEGY_PROPORTION, STRATEGY_SUBJECT)

DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)
EVAL_BATCH = 64


@dataclass(frozen=True)
class DatasetSplit:
    strategy: str
    train: tuple
    validation: tuple
    test: tuple

    def __post_init__(self):
        sets = [set(self.train), set(self.validation), set(self.test)]
        for i in range(3):
            for j in range(i + 1, 3):
                if sets[i] & sets[j]:
                    raise SplitError("split partitions share recording ids")

    def as_dict(self):
        return {"strategy": self.strategy, "train": list(self.train),
                "validation": list(self.validation), "test": list(self.test)}


def make_split(records, strategy: str, fractions=DEFAULT_FRACTIONS,
               seed: int = 0) -> DatasetSplit:
    """Deterministic split of (recording_id, speaker_id, label) records.

    proportion: per-class stratified with round(fraction * n) recordings of
    each class in validation/test. subject: split the speaker set instead,
    so no speaker appears in two partitions.
    """
    if strategy not in STRATEGIES:
        raise SplitError(f"unknown strategy {strategy!r}")
    if abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) <= 0:
        raise SplitError(f"fractions must be positive and sum to 1, got {fractions}")
    records = list(records)
    if not records:
        raise SplitError("no records to split")
    rng = rng_for(seed, 4)

    if strategy == STRATEGY_PROPORTION:
        by_label: dict = {}
        for rec_id, _, label in records:
            by_label.setdefault(label, []).append(rec_id)
        train, val, test = [], [], []
        for label in sorted(by_label):
            ids = sorted(by_label[label])
            rng.shuffle(ids)
            n = len(ids)
            n_test = int(round(fractions[2] * n))
            n_val = int(round(fractions[1] * n))
            if n_test == 0 or n_val == 0 or n - n_test - n_val <= 0:
                raise SplitError(f"class {label} with {n} recordings cannot be split")
            test.extend(ids[:n_test])
            val.extend(ids[n_test : n_test + n_val])
            train.extend(ids[n_test + n_val :])
        return DatasetSplit(strategy, tuple(sorted(train)), tuple(sorted(val)),
                            tuple(sorted(test)))

    speakers = sorted({spk for _, spk, _ in records})
    if len(speakers) < 3:
        raise SplitError(f"subject-wise split needs >= 3 speakers, got {len(speakers)}")
    rng.shuffle(speakers)
    n = len(speakers)
    n_test = max(1, int(round(fractions[2] * n)))
    n_val = max(1, int(round(fractions[1] * n)))
    if n - n_test - n_val < 1:
        raise SplitError(f"{n} speakers cannot fill three subject-wise partitions")
    test_spk = set(speakers[:n_test])
    val_spk = set(speakers[n_test : n_test + n_val])
    buckets = {"train": [], "val": [], "test": []}
    for rec_id, spk, _ in records:
        if spk in test_spk:
            buckets["test"].append(rec_id)
        elif spk in val_spk:
            buckets["val"].append(rec_id)
        else:
            buckets["train"].append(rec_id)
    return DatasetSplit(strategy, tuple(sorted(buckets["train"])),
                        tuple(sorted(buckets["val"])), tuple(sorted(buckets["test"])))


@dataclass
class Standardization:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.mean) / self.std

    def as_dict(self):
        return {"schema": 1, "mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(mean=np.asarray(d["mean"]), std=np.asarray(d["std"]))


def standardize(train_matrix: np.ndarray, std_floor: float = 1e-8) -> Standardization:
    """Per-dimension z-score statistics from the train split only."""
    if train_matrix.shape[0] == 0:
        raise ConfigError("cannot standardize an empty train split")
    mean = train_matrix.mean(axis=0)
    std = np.maximum(train_matrix.std(axis=0), std_floor)
    return Standardization(mean=mean, std=std)


@dataclass(frozen=True)
class TrainConfig:
    task: str
    lambda_grid: tuple = (1e-4, 1e-3, 1e-2, 1e-1)
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    class_weighting: bool = True

    def __post_init__(self):
        if not self.lambda_grid:
            raise ConfigError("lambda grid must be non-empty")
        if any(l < 0 for l in self.lambda_grid):
            raise ConfigError("lambda values must be >= 0")
        if not self.patience < self.max_epochs:
            raise ConfigError(f"patience {self.patience} must be < max_epochs {self.max_epochs}")


@dataclass
class TrainReport:
    task: str
    strategy: str
    seed: int
    baseline: bool
    lambda_grid: list
    chosen_lambda: float
    best_epoch: int
    lambda_search: list                  # {lambda, best_val_auc, best_epoch}
    epochs: list                         # chosen run: {epoch, loss_res, [loss_spk], loss_total, val_auc}
    steps: list                          # chosen run: [loss_res, loss_spk, loss_total]
    j_ratio_before: float
    j_ratio_after: float
    test_metrics: dict

    def as_dict(self):
        d = asdict(self)
        d["schema"] = 1
        return d


def embed_matrix(mp: ModelParams, matrix: np.ndarray) -> np.ndarray:
    """Evaluation-mode embeddings, batched."""
    out = []
    for start in range(0, matrix.shape[0], EVAL_BATCH):
        out.append(encode_batch(mp, matrix[start : start + EVAL_BATCH]).data)
    return np.concatenate(out, axis=0)


def predict_scores(mp: ModelParams, matrix: np.ndarray) -> np.ndarray:
    """Evaluation-mode condition probabilities for binary heads."""
    out = []
    for start in range(0, matrix.shape[0], EVAL_BATCH):
        emb = encode_batch(mp, matrix[start : start + EVAL_BATCH])
        out.append(sigmoid(head_respiratory(mp, emb)).data[:, 0])
    return np.concatenate(out)


def test_embedding_j_ratio(mp: ModelParams, matrix: np.ndarray, speakers) -> float:
    """J-ratio over eval-mode embeddings, dropping speakers with fewer than
    two recordings (their covariance is not estimable)."""
    emb = embed_matrix(mp, matrix)
    counts: dict = {}
    for s in speakers:
        counts[s] = counts.get(s, 0) + 1
    keep = [i for i, s in enumerate(speakers) if counts[s] >= 2]
    kept_speakers = [speakers[i] for i in keep]
    if len(set(kept_speakers)) < 2:
        raise EstimationError("fewer than two speakers with >= 2 recordings")
    return j_ratio(EmbeddingSet(kept_speakers, emb[keep]))


def evaluate_model(mp: ModelParams, matrix: np.ndarray, labels, speakers) -> dict:
    scores = predict_scores(mp, matrix)
    labels = np.asarray(labels, dtype=np.int64)
    recalls = binary_recalls(scores, labels)
    return {
        "auc": auc(scores, labels),
        "recall_class0": recalls[0],
        "recall_class1": recalls[1],
        "j_ratio": test_embedding_j_ratio(mp, matrix, list(speakers)),
        "counts": {
            "n": int(labels.size),
            "class0": int(np.count_nonzero(labels == 0)),
            "class1": int(np.count_nonzero(labels == 1)),
            "speakers": len(set(speakers)),
        },
    }


class _SplitData:
    """Feature table resolved against one split, standardized on train."""

    def __init__(self, table: FeatureTable, split: DatasetSplit):
        idx = {r: i for i, r in enumerate(table.recording_ids)}
        missing = [r for part in (split.train, split.validation, split.test)
                   for r in part if r not in idx]
        if missing:
            raise ConfigError(f"split references unknown recordings, e.g. {missing[0]!r}")

        def gather(ids):
            rows = [idx[r] for r in ids]
            return (table.matrix[rows],
                    np.asarray([table.labels[i] for i in rows], dtype=np.int64),
                    [table.speaker_ids[i] for i in rows])

        self.stats = standardize(table.matrix[[idx[r] for r in split.train]])
        (x, y, s) = gather(split.train)
        self.x_train, self.y_train, self.spk_train = self.stats.apply(x), y, s
        (x, y, s) = gather(split.validation)
        self.x_val, self.y_val, self.spk_val = self.stats.apply(x), y, s
        (x, y, s) = gather(split.test)
        self.x_test, self.y_test, self.spk_test = self.stats.apply(x), y, s

        self.speaker_index = {s: i for i, s in enumerate(sorted(set(self.spk_train)))}
        self.spk_train_ids = np.asarray([self.speaker_index[s] for s in self.spk_train])
        if min(self.y_train.mean(), 1 - self.y_train.mean()) == 0:
            raise SplitError("train split is single-class")


@dataclass
class _RunResult:
    lam: float
    best_val_auc: float
    best_epoch: int
    snapshot: dict
    epochs: list
    steps: list


def _class_weights(y: np.ndarray) -> np.ndarray:
    n = y.size
    n_pos = max(1, int(y.sum()))
    n_neg = max(1, n - int(y.sum()))
    w_pos = n / (2.0 * n_pos)
    w_neg = n / (2.0 * n_neg)
    return np.where(y == 1, w_pos, w_neg)


def _run_single(data: _SplitData, config: TrainConfig, lam: float) -> _RunResult:
    mp = init_params(config.encoder, n_classes=1,
                     n_speakers=len(data.speaker_index), seed=config.seed)
    opt = Adam(mp.params, lr=config.lr)
    n_train = data.x_train.shape[0]
    weights_all = _class_weights(data.y_train) if config.class_weighting else np.ones(n_train)

    best_auc = -np.inf
    best_epoch = -1
    best_snapshot = mp.data_snapshot()
    epochs_log, steps_log = [], []
    stall = 0
    step_counter = 0
    for epoch in range(config.max_epochs):
        order = rng_for(config.seed, 5, epoch).permutation(n_train)
        epoch_res, epoch_spk, epoch_tot, n_batches = 0.0, 0.0, 0.0, 0
        for start in range(0, n_train, config.batch_size):
            batch = order[start : start + config.batch_size]
            stream = SeedStream(config.seed, step_counter)
            step_counter += 1
            emb = encode_batch(mp, data.x_train[batch], train=True, stream=stream)
            probs = sigmoid(head_respiratory(mp, emb, train=True, stream=stream))
            l_res = bce_loss(ad.reshape(probs, (len(batch),)), data.y_train[batch],
                             weights=weights_all[batch])
            spk_logits = head_speaker(mp, emb, lam=lam, train=True, stream=stream)
            l_spk = softmax_ce_loss(spk_logits, data.spk_train_ids[batch])
            loss = ad.add(l_res, l_spk)
            if not (np.isfinite(l_res.data) and np.isfinite(l_spk.data)):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}, "
                    f"lambda {lam}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            res_v, spk_v = float(l_res.data), float(l_spk.data)
            total_v = res_v - lam * spk_v
            steps_log.append([res_v, spk_v, total_v])
            epoch_res += res_v
            epoch_spk += spk_v
            epoch_tot += total_v
            n_batches += 1
        val_auc = auc(predict_scores(mp, data.x_val), data.y_val)
        epochs_log.append({
            "epoch": epoch,
            "loss_res": epoch_res / n_batches,
            "loss_spk": epoch_spk / n_batches,
            "loss_total": epoch_tot / n_batches,
            "val_auc": val_auc,
        })
        if val_auc > best_auc:
            best_auc = val_auc
            best_epoch = epoch
            best_snapshot = mp.data_snapshot()
            stall = 0
        else:
            if val_auc == best_auc:
                # tie: prefer the later epoch, where the reversal layer has
                # had more time to strip speaker information at equal AUC
                best_epoch = epoch
                best_snapshot = mp.data_snapshot()
            stall += 1
            if stall >= config.patience:
                break
    mp.load_snapshot(best_snapshot)
    return _RunResult(lam=lam, best_val_auc=float(best_auc), best_epoch=best_epoch,
                      snapshot=best_snapshot, epochs=epochs_log, steps=steps_log)


def _finalize(data: _SplitData, config: TrainConfig, split: DatasetSplit,
              run: _RunResult, lambda_search: list, baseline: bool):
    mp = init_params(config.encoder, n_classes=1,
                     n_speakers=len(data.speaker_index), seed=config.seed)
    j_before = test_embedding_j_ratio(mp, data.x_test, data.spk_test)
    mp.load_snapshot(run.snapshot)
    j_after = test_embedding_j_ratio(mp, data.x_test, data.spk_test)
    metrics = evaluate_model(mp, data.x_test, data.y_test, data.spk_test)
    epochs = run.epochs
    if baseline:
        epochs = [{k: v for k, v in row.items() if k != "loss_spk"} for row in epochs]
    report = TrainReport(
        task=config.task,
        strategy=split.strategy,
        seed=config.seed,
        baseline=baseline,
        lambda_grid=[0.0] if baseline else list(config.lambda_grid),
        chosen_lambda=run.lam,
        best_epoch=run.best_epoch,
        lambda_search=lambda_search,
        epochs=epochs,
        steps=run.steps,
        j_ratio_before=j_before,
        j_ratio_after=j_after,
        test_metrics=metrics,
    )
    return report, mp


def train_adversarial(table: FeatureTable, split: DatasetSplit,
                      config: TrainConfig):
    """Grid-search lambda, train with the reversal coupling, early-stop on
    validation AUC, and return (TrainReport, ModelParams, Standardization)."""
    data = _SplitData(table, split)
    runs = [_run_single(data, config, lam) for lam in config.lambda_grid]
    # argmax validation AUC; exact ties go to the larger lambda
    best = max(range(len(runs)), key=lambda i: (runs[i].best_val_auc, runs[i].lam))
    search = [{"lambda": r.lam, "best_val_auc": r.best_val_auc,
               "best_epoch": r.best_epoch} for r in runs]
    report, mp = _finalize(data, config, split, runs[best], search, baseline=False)
    return report, mp, data.stats


def train_baseline(table: FeatureTable, split: DatasetSplit, config: TrainConfig):
    """Single-task baseline: the identical pipeline pinned at lambda = 0, so
    no speaker gradient ever reaches the encoder."""
    data = _SplitData(table, split)
    run = _run_single(data, config, lam=0.0)
    search = [{"lambda": 0.0, "best_val_auc": run.best_val_auc,
               "best_epoch": run.best_epoch}]
    report, mp = _finalize(data, config, split, run, search, baseline=True)
    return report, mp, data.stats
