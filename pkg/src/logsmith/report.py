"""Rendering of metric reports: delimited summary plus matplotlib figures."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricReport


def flatten_report(report: MetricReport) -> list[tuple[str, float]]:
    rows: list[tuple[str, float]] = []
    whether = report.whether
    rows += [("whether.ba", whether.ba), ("whether.precision", whether.precision),
             ("whether.recall", whether.recall), ("whether.f1", whether.f1)]
    rows.append(("where.pa", report.pa))
    for name, value in report.what.to_dict().items():
        rows.append((f"what.{name}", value))
    for name, value in sorted(report.counts.items()):
        rows.append((f"counts.{name}", float(value)))
    if report.judge is not None:
        rows.append(("judge.mean", report.judge))
    return rows


def write_report_files(report: MetricReport, out_dir: str | Path,
                       telemetry: dict[str, float] | None = None) -> list[Path]:
    """Write metrics.csv plus bar-chart PNGs into out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    csv_path = out / "metrics.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "value"])
        for name, value in flatten_report(report):
            writer.writerow([name, f"{value:.6f}"])
        for name, value in sorted((telemetry or {}).items()):
            writer.writerow([f"telemetry.{name}", f"{value:.6f}"])
    written.append(csv_path)

    written.append(_bar_figure(
        out / "whether.png", "Whether-to-log",
        {"BA": report.whether.ba, "Precision": report.whether.precision,
         "Recall": report.whether.recall, "F1": report.whether.f1}))
    what = report.what
    written.append(_bar_figure(
        out / "generation.png", "Where / what-to-log",
        {"PA": report.pa, "LA": what.la, "AOD": what.aod, "PMR": what.pmr,
         "Var-F1": what.variable_f1, "BLEU-1": what.bleu_1, "BLEU-4": what.bleu_4,
         "ROUGE-1": what.rouge_1, "ROUGE-L": what.rouge_l}))
    written.append(_bar_figure(
        out / "counts.png", "Samples per gated dimension",
        {name: float(report.counts.get(name, 0))
         for name in ("whether", "where", "what")},
        ylim=None))
    if telemetry:
        written.append(_bar_figure(out / "telemetry.png", "Tool telemetry (means)",
                                   dict(sorted(telemetry.items())), ylim=None))
    return written


def _bar_figure(path: Path, title: str, values: dict[str, float],
                ylim: tuple[float, float] | None = (0.0, 1.05)) -> Path:
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(values)), 3.2))
    names = list(values)
    heights = [values[n] for n in names]
    ax.bar(names, heights, color="#4878a8")
    ax.set_title(title)
    if ylim is not None:
        ax.set_ylim(*ylim)
    for i, height in enumerate(heights):
        ax.text(i, height, f"{height:.3f}" if ylim else f"{height:g}",
                ha="center", va="bottom", fontsize=8)
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
