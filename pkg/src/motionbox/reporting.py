"""Figure and delimited-output rendering for training and evaluation runs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import EvalReport


def plot_loss_curves(history: list[dict], out_png, title: str = "training loss") -> None:
    """Render every numeric column of the history against its step column."""
    if not history:
        return
    steps = [row["step"] for row in history]
    fig, ax = plt.subplots(figsize=(7, 4))
    for key in history[0]:
        if key == "step":
            continue
        ax.plot(steps, [row[key] for row in history], label=key, linewidth=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def write_report_csv(report: EvalReport, out_csv) -> None:
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["set", "fid"])
        for idx, score in enumerate(report.scores):
            writer.writerow([idx, score])


def plot_eval_report(report: EvalReport, out_png) -> None:
    """Per-set FID scores with the bootstrap CI band and the mean line."""
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = list(range(len(report.scores)))
    ax.bar(xs, report.scores, color="#4878cf", label="per-set FID")
    ax.axhline(report.mean, color="#d65f5f", linewidth=1.5, label=f"mean = {report.mean:.3f}")
    ax.axhspan(report.ci[0], report.ci[1], color="#d65f5f", alpha=0.15, label="bootstrap CI")
    ax.set_xlabel("set")
    ax.set_ylabel("FID")
    ax.set_title("FID per generated set")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
