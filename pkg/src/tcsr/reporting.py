"""Delimited and graphical views of a benchmark report."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluator import Report


def write_per_example_csv(report: "Report", path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "ex", "em", "gave_up", "attempts", "precise_sql"])
        for score in report.per_example:
            writer.writerow(
                [
                    score.id,
                    int(score.ex),
                    int(score.em),
                    int(score.gave_up),
                    score.attempts,
                    score.precise_sql or "",
                ]
            )


def render_figures(report: "Report", out_dir: str | Path) -> None:
    """Accuracy bar chart and per-question attempt counts as PNG files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(["EX", "EM"], [report.ex_accuracy, report.em_accuracy], color=["#4878cf", "#6acc65"])
    ax.set_ylim(0, 1)
    ax.set_ylabel("accuracy")
    ax.set_title(f"n = {report.n}")
    for i, value in enumerate([report.ex_accuracy, report.em_accuracy]):
        ax.text(i, value + 0.02, f"{value:.1%}", ha="center")
    fig.tight_layout()
    fig.savefig(out_dir / "accuracy.png", dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3))
    ids = [score.id for score in report.per_example]
    attempts = [score.attempts for score in report.per_example]
    colors = ["#6acc65" if score.ex else "#d65f5f" for score in report.per_example]
    ax.bar(range(len(ids)), attempts, color=colors)
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(ids, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("SQL attempts")
    ax.set_title("attempts per question (green = EX correct)")
    fig.tight_layout()
    fig.savefig(out_dir / "attempts.png", dpi=150)
    plt.close(fig)
