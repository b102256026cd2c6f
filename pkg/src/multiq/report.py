"""Hit-rate report artifacts: aligned text table, CSV, and bar-chart figure."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_CSV_COLUMNS = ("classifier", "method", "feature_count", "folds", "seed", "hit_rate_percent")

_METHOD_COLORS = {"multiq": "#2c7fb8", "multiq-selected": "#7fcdbb", "bgs": "#edf8b1"}


@dataclass
class ReportRow:
    classifier: str
    method: str
    feature_count: int
    hit_rate: float


@dataclass
class HitRateReport:
    """Accuracy percentages per (classifier, method) pair."""

    rows: list[ReportRow]
    folds: int
    seed: int

    def hit_rate(self, classifier: str, method: str) -> float:
        for row in self.rows:
            if row.classifier == classifier and row.method == method:
                return row.hit_rate
        raise KeyError(f"no report row for ({classifier!r}, {method!r})")

    def classifiers(self) -> list[str]:
        seen = list(dict.fromkeys(row.classifier for row in self.rows))
        return seen

    def methods(self) -> list[str]:
        return list(dict.fromkeys(row.method for row in self.rows))


def format_table(report: HitRateReport) -> str:
    """Aligned classifier x method table of hit rates, header carries folds/seed."""
    methods = report.methods()
    counts = {row.method: row.feature_count for row in report.rows}
    headers = ["classifier"] + [f"{m} ({counts[m]})" for m in methods]
    lines = [[c] + [f"{report.hit_rate(c, m):.2f}" for m in methods] for c in report.classifiers()]
    widths = [max(len(row[i]) for row in [headers] + lines) for i in range(len(headers))]
    out = [f"hit rate (%) under stratified {report.folds}-fold CV, seed {report.seed}"]
    out.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    out.append("  ".join("-" * w for w in widths))
    for row in lines:
        out.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(out)


def write_csv(report: HitRateReport, path) -> None:
    """Write one row per (classifier, method) with the columns
    classifier, method, feature_count, folds, seed, hit_rate_percent."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for row in report.rows:
            writer.writerow([
                row.classifier, row.method, row.feature_count,
                report.folds, report.seed, f"{row.hit_rate:.2f}",
            ])


def render_figure(report: HitRateReport, path) -> None:
    """Grouped-bar chart of hit rates per classifier and method."""
    classifiers = report.classifiers()
    methods = report.methods()
    width = 0.8 / len(methods)
    fig, ax = plt.subplots(figsize=(1.8 + 1.1 * len(classifiers), 4.0))
    for mi, method in enumerate(methods):
        xs = [i + (mi - (len(methods) - 1) / 2) * width for i in range(len(classifiers))]
        ys = [report.hit_rate(c, method) for c in classifiers]
        ax.bar(xs, ys, width=width, label=method,
               color=_METHOD_COLORS.get(method), edgecolor="black", linewidth=0.5)
    ax.set_xticks(range(len(classifiers)))
    ax.set_xticklabels(classifiers)
    ax.set_ylabel("hit rate (%)")
    ax.set_ylim(0, 105)
    ax.set_title(f"stratified {report.folds}-fold CV, seed {report.seed}")
    ax.legend(loc="lower right")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
