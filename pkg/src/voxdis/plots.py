"""Matplotlib figure rendering for attribution and comparison reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

SUPPRESSED_COLOR = "#c0392b"
ENHANCED_COLOR = "#2471a3"


def plot_shap_top(report, path) -> None:
    """Horizontal bars: top suppressed (red) and enhanced (blue) features,
    ranked by the change in mean |Shapley| between the two models."""
    rows = list(report.suppressed)[::-1] + list(report.enhanced)
    if not rows:
        rows = [("(no change)", 0.0)]
    names = [r[0] for r in rows]
    deltas = [r[1] for r in rows]
    colors = [SUPPRESSED_COLOR if d < 0 else ENHANCED_COLOR for d in deltas]
    fig, ax = plt.subplots(figsize=(7, 0.45 * len(rows) + 1.5))
    ax.barh(range(len(rows)), deltas, color=colors)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(names)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("change in mean |Shapley value| (adversarial - baseline)")
    ax.set_title("Top features by importance change")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_comparison_bars(rows, metric_key: str, title: str, path) -> None:
    """Grouped bars for one metric across labelled model rows.

    rows: list of (label, metrics dict)."""
    labels = [label for label, _ in rows]
    values = [m[metric_key] for _, m in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(labels, values, color=["#7f8c8d", "#27ae60"][: len(rows)])
    for bar, v in zip(bars, values):
        ax.annotate(f"{v:.3f}", (bar.get_x() + bar.get_width() / 2, v),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylabel(metric_key)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
