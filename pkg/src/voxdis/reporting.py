"""Baseline-vs-adversarial comparison reports."""

from __future__ import annotations

import csv
import json

from .errors import ConfigError
from .plots import plot_comparison_bars

COMPARISON_FIELDS = ("auc", "recall_class0", "recall_class1", "j_ratio")


def report_compare(baseline: dict, adversarial: dict) -> dict:
    """Two-row comparison of metrics files from the same task.

    The dual_improvement flag marks the run where the adversarial model both
    matches-or-beats the baseline AUC and does not increase the J-ratio.
    """
    task_b = baseline.get("task")
    task_a = adversarial.get("task")
    if task_b != task_a:
        raise ConfigError(f"metrics from different tasks: {task_b!r} vs {task_a!r}")
    rows = {"baseline": {k: baseline[k] for k in COMPARISON_FIELDS},
            "adversarial": {k: adversarial[k] for k in COMPARISON_FIELDS}}
    deltas = {k: adversarial[k] - baseline[k] for k in COMPARISON_FIELDS}
    dual = adversarial["auc"] >= baseline["auc"] and adversarial["j_ratio"] <= baseline["j_ratio"]
    return {
        "schema": 1,
        "task": task_b,
        "rows": rows,
        "deltas": deltas,
        "dual_improvement": bool(dual),
    }


def write_report_files(report: dict, out_dir) -> list:
    """Emit report.json, the delimited comparison table and bar charts.

    Returns the list of written paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    json_path = out_dir / "report.json"
    json_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    paths.append(json_path)

    csv_path = out_dir / "report.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model"] + list(COMPARISON_FIELDS))
        for name in ("baseline", "adversarial"):
            w.writerow([name] + [f"{report['rows'][name][k]:.9g}" for k in COMPARISON_FIELDS])
    paths.append(csv_path)

    rows = [("baseline", report["rows"]["baseline"]),
            ("adversarial", report["rows"]["adversarial"])]
    for key, fname in (("auc", "report_auc.svg"), ("j_ratio", "report_jratio.svg")):
        fig_path = out_dir / fname
        plot_comparison_bars(rows, key, f"{report['task']}: {key}", fig_path)
        paths.append(fig_path)
    return paths
