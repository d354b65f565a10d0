"""Command-line entry point wiring all stages into file-based experiments.

Every stage reads and writes plain files, derives all randomness from its
--seed flag, and records a run.json with the resolved configuration and
sha256 hashes of the artifacts it wrote. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import cohort as co
from .attribution import delta_analysis
from .checkpoint import load_checkpoint, save_checkpoint
from .dsp import extract_features, load_wav, read_features_csv, save_wav, write_features_csv
from .dsp.features import FEATURE_NAMES, FeatureTable
from .errors import ConfigError, VoxdisError
from .model import EncoderConfig, encode_batch, head_respiratory
from .plots import plot_shap_top
from .reporting import report_compare, write_report_files
from .training import (
    DatasetSplit,
    Standardization,
    TrainConfig,
    evaluate_model,
    make_split,
    test_embedding_j_ratio,
    train_adversarial,
    train_baseline,
)
from .autodiff import sigmoid


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_run_json(out_dir: Path, command: str, config: dict, artifacts: list) -> None:
    run = {
        "schema": 1,
        "command": command,
        "config": config,
        "artifacts": {str(p.relative_to(out_dir)): _sha256(p) for p in artifacts},
    }
    _write_json(out_dir / "run.json", run)


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_split(path: Path) -> DatasetSplit:
    d = json.loads(_require(path, "split file").read_text())
    return DatasetSplit(strategy=d["strategy"], train=tuple(d["train"]),
                        validation=tuple(d["validation"]), test=tuple(d["test"]))


def _default_strategy(task: str) -> str:
    return "proportion" if task == co.TASK_STATUS else "subject"


def cmd_synth(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = co.make_cohort(args.speakers, args.per_speaker, args.confound,
                              args.task, args.seed)
    split = make_split(manifest.records(), _default_strategy(args.task), seed=args.seed)
    hints = {r: "train" for r in split.train}
    hints.update({r: "validation" for r in split.validation})
    hints.update({r: "test" for r in split.test})
    manifest = manifest.with_split_hints(hints)
    if args.normalize_speakers:
        manifest = co.speaker_normalize(manifest)
    artifacts = []
    manifest_path = out / "manifest.csv"
    co.write_manifest_csv(manifest_path, manifest)
    artifacts.append(manifest_path)
    if args.mode == "audio":
        wav_dir = out / "wavs"
        wav_dir.mkdir(exist_ok=True)
        for clip in co.synth_cohort_audio(manifest, duration=args.duration):
            path = wav_dir / f"{clip.id}.wav"
            save_wav(path, clip)
            artifacts.append(path)
    else:
        table = co.synth_cohort_features(manifest, noise_scale=args.noise_scale,
                                         speaker_coding=args.speaker_coding)
        features_path = out / "features.csv"
        write_features_csv(features_path, table)
        artifacts.append(features_path)
    _write_run_json(out, "synth", vars(args) | {"out": str(out)}, artifacts)


def cmd_extract(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = co.read_manifest_csv(_require(Path(args.manifest), "manifest"))
    audio_dir = _require(Path(args.audio_dir), "audio directory")
    ids, speakers, labels, flags, rows = [], [], [], [], []
    for rec in manifest.recordings:
        clip = load_wav(_require(audio_dir / f"{rec.recording_id}.wav", "WAV file"),
                        id=rec.recording_id, speaker_id=rec.speaker_id, label=rec.label)
        fv = extract_features(clip)
        ids.append(rec.recording_id)
        speakers.append(rec.speaker_id)
        labels.append(rec.label)
        flags.append(fv.quality_flags)
        rows.append(fv.values)
    table = FeatureTable(ids, speakers, labels, flags, np.stack(rows))
    features_path = out / "features.csv"
    write_features_csv(features_path, table)
    _write_run_json(out, "extract", vars(args) | {"out": str(out)}, [features_path])


def _parse_lambda_grid(text: str) -> tuple:
    try:
        grid = tuple(float(x) for x in text.split(",") if x.strip() != "")
    except ValueError:
        raise ConfigError(f"bad lambda grid {text!r}")
    if not grid:
        raise ConfigError("lambda grid is empty")
    return grid


def cmd_train(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = read_features_csv(_require(Path(args.features), "feature CSV"))
    if args.manifest:
        manifest = co.read_manifest_csv(_require(Path(args.manifest), "manifest"))
        manifest_ids = {r.recording_id for r in manifest.recordings}
        if manifest_ids != set(table.recording_ids):
            raise ConfigError("manifest and feature CSV list different recordings")
    records = list(zip(table.recording_ids, table.speaker_ids, table.labels))
    split = make_split(records, args.split, seed=args.seed)
    encoder = EncoderConfig(lstm_hidden=args.lstm_hidden) if args.lstm_hidden else EncoderConfig()
    config = TrainConfig(task=args.task,
                         lambda_grid=_parse_lambda_grid(args.lambda_grid),
                         lr=args.lr, batch_size=args.batch_size,
                         max_epochs=args.epochs, patience=args.patience,
                         seed=args.seed, encoder=encoder)
    if args.baseline:
        report, mp, stats = train_baseline(table, split, config)
    else:
        report, mp, stats = train_adversarial(table, split, config)
    artifacts = []
    report_path = out / "report.json"
    _write_json(report_path, report.as_dict())
    artifacts.append(report_path)
    ckpt_path = out / "model.ckpt"
    save_checkpoint(ckpt_path, mp, extra={"task": args.task,
                                          "baseline": args.baseline,
                                          "chosen_lambda": report.chosen_lambda})
    artifacts.append(ckpt_path)
    stats_path = out / "stats.json"
    _write_json(stats_path, stats.as_dict())
    artifacts.append(stats_path)
    split_path = out / "split.json"
    _write_json(split_path, {"schema": 1} | split.as_dict())
    artifacts.append(split_path)
    _write_run_json(out, "train", vars(args) | {"out": str(out)}, artifacts)


def _load_model_dir(model_path: Path, stats_path: Path):
    mp, extra = load_checkpoint(_require(model_path, "checkpoint"))
    stats = Standardization.from_dict(json.loads(_require(stats_path, "stats file").read_text()))
    return mp, extra, stats


def _eval_common(args, j_only: bool) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mp, extra, stats = _load_model_dir(Path(args.model), Path(args.stats))
    table = read_features_csv(_require(Path(args.features), "feature CSV"))
    split = _load_split(Path(args.split_file))
    part_ids = getattr(split, args.part)
    sub = table.subset(list(part_ids))
    matrix = stats.apply(sub.matrix)
    if j_only:
        payload = {
            "schema": 1,
            "task": extra.get("task"),
            "part": args.part,
            "j_ratio": test_embedding_j_ratio(mp, matrix, sub.speaker_ids),
            "counts": {"n": len(sub), "speakers": len(set(sub.speaker_ids))},
        }
    else:
        payload = {"schema": 1, "task": extra.get("task"), "part": args.part}
        payload.update(evaluate_model(mp, matrix, sub.labels, sub.speaker_ids))
    metrics_path = out / "metrics.json"
    _write_json(metrics_path, payload)
    _write_run_json(out, "jratio" if j_only else "eval",
                    vars(args) | {"out": str(out)}, [metrics_path])


def cmd_eval(args) -> None:
    _eval_common(args, j_only=False)


def cmd_jratio(args) -> None:
    _eval_common(args, j_only=True)


def _score_fn(mp, stats):
    def score(X):
        emb = encode_batch(mp, stats.apply(np.asarray(X, dtype=np.float64)))
        return head_respiratory(mp, emb).data[:, 0]
    return score


def cmd_shap(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_dir = Path(args.baseline_dir)
    adv_dir = Path(args.adversarial_dir)
    mp_b, _, stats_b = _load_model_dir(base_dir / "model.ckpt", base_dir / "stats.json")
    mp_a, _, stats_a = _load_model_dir(adv_dir / "model.ckpt", adv_dir / "stats.json")
    if not (np.array_equal(stats_b.mean, stats_a.mean)
            and np.array_equal(stats_b.std, stats_a.std)):
        raise ConfigError("models were standardized with different statistics")
    table = read_features_csv(_require(Path(args.features), "feature CSV"))
    split = _load_split(Path(args.split_file))
    sub = table.subset(list(split.test))
    instances = sub.matrix[: args.max_recordings] if args.max_recordings else sub.matrix
    background = stats_b.mean      # train-split mean feature vector
    report = delta_analysis(_score_fn(mp_b, stats_b), _score_fn(mp_a, stats_a),
                            instances, background,
                            n_samples=args.n_samples, seed=args.seed)
    artifacts = []
    means_path = out / "shap_means.csv"
    with open(means_path, "w", newline="") as fh:
        import csv as _csv
        w = _csv.writer(fh)
        w.writerow(["feature", "baseline_mean_abs_shap", "adversarial_mean_abs_shap", "delta"])
        for i, name in enumerate(FEATURE_NAMES):
            w.writerow([name,
                        f"{report.baseline_mean_abs[i]:.9g}",
                        f"{report.adversarial_mean_abs[i]:.9g}",
                        f"{report.delta[i]:.9g}"])
    artifacts.append(means_path)
    svg_path = out / "shap_top.svg"
    plot_shap_top(report, svg_path)
    artifacts.append(svg_path)
    _write_run_json(out, "shap", vars(args) | {"out": str(out)}, artifacts)


def cmd_report(args) -> None:
    out = Path(args.out)
    baseline = json.loads(_require(Path(args.baseline_metrics), "baseline metrics").read_text())
    adversarial = json.loads(_require(Path(args.adversarial_metrics),
                                      "adversarial metrics").read_text())
    report = report_compare(baseline, adversarial)
    paths = write_report_files(report, out)
    _write_run_json(out, "report", vars(args) | {"out": str(out)}, paths)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxdis",
        description="Speaker-disentangled acoustic pathology classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--mode", choices=["audio", "features"], required=True)
    p.add_argument("--speakers", type=int, required=True)
    p.add_argument("--per-speaker", type=int, required=True, dest="per_speaker")
    p.add_argument("--confound", type=float, required=True)
    p.add_argument("--task", choices=list(co.TASKS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=2.5)
    p.add_argument("--normalize-speakers", action="store_true", dest="normalize_speakers")
    p.add_argument("--speaker-coding", default=co.SPEAKER_CODING_PITCH_FORMANT,
                   choices=[co.SPEAKER_CODING_PITCH_FORMANT, co.SPEAKER_CODING_PITCH_ONLY],
                   dest="speaker_coding")
    p.add_argument("--noise-scale", type=float, default=1.0, dest="noise_scale")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract 54-dim features from WAV files")
    p.add_argument("--audio-dir", required=True, dest="audio_dir")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train adversarial or baseline model")
    p.add_argument("--task", choices=list(co.TASKS), required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--split", choices=["proportion", "subject"], required=True)
    p.add_argument("--lambda-grid", default="1e-4,1e-3,1e-2,1e-1", dest="lambda_grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lstm-hidden", type=int, default=None, dest="lstm_hidden")
    p.set_defaults(func=cmd_train)

    for name, fn in (("eval", cmd_eval), ("jratio", cmd_jratio)):
        p = sub.add_parser(name, help=f"{name} a trained model on one split part")
        p.add_argument("--model", required=True)
        p.add_argument("--stats", required=True)
        p.add_argument("--features", required=True)
        p.add_argument("--split-file", required=True, dest="split_file")
        p.add_argument("--part", choices=["train", "validation", "test"], default="test")
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("shap", help="attribution deltas between two models")
    p.add_argument("--baseline-dir", required=True, dest="baseline_dir")
    p.add_argument("--adversarial-dir", required=True, dest="adversarial_dir")
    p.add_argument("--features", required=True)
    p.add_argument("--split-file", required=True, dest="split_file")
    p.add_argument("--out", required=True)
    p.add_argument("--n-samples", type=int, default=512, dest="n_samples")
    p.add_argument("--max-recordings", type=int, default=40, dest="max_recordings")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_shap)

    p = sub.add_parser("report", help="compare baseline and adversarial metrics")
    p.add_argument("--baseline-metrics", required=True, dest="baseline_metrics")
    p.add_argument("--adversarial-metrics", required=True, dest="adversarial_metrics")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except VoxdisError as exc:
        print(f"voxdis {args.command}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"voxdis {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
