"""Chart rendering from result CSVs.

Figures are batch outputs rendered straight from the delimited tables the
experiments emit, so any table can be re-plotted without re-running.  All
rendering uses the Agg backend and writes PNG files.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .results import ResultTable, read_result_csv  # noqa: E402


def _mean_ci(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, 1.96 * math.sqrt(var / n)


def _aggregate(table: ResultTable, column: str) -> tuple[list[int], list[float], list[float]]:
    """Mean and 95% CI of a row field, grouped by episode_or_budget."""
    groups: dict[int, list[float]] = defaultdict(list)
    for row in table.rows:
        value = row.cumulative_mean if column == "cumulative_mean" else row.return_value
        groups[row.episode_or_budget].append(value)
    xs = sorted(groups)
    means, cis = [], []
    for x in xs:
        mean, ci = _mean_ci(groups[x])
        means.append(mean)
        cis.append(ci)
    return xs, means, cis


def plot_curves(
    tables: dict[str, ResultTable],
    out_png: str | Path,
    *,
    title: str,
    xlabel: str,
    ylabel: str,
    column: str = "cumulative_mean",
    log_x: bool = False,
) -> Path:
    """Per-method mean curves with 95% confidence bands."""
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    for method, table in sorted(tables.items()):
        xs, means, cis = _aggregate(table, column)
        if not xs:
            continue
        line, = ax.plot(xs, means, marker="o", markersize=3, label=method)
        lower = [m - c for m, c in zip(means, cis)]
        upper = [m + c for m, c in zip(means, cis)]
        ax.fill_between(xs, lower, upper, alpha=0.15, color=line.get_color())
    if log_x:
        ax.set_xscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def plot_bars(
    tables: dict[str, ResultTable],
    out_png: str | Path,
    *,
    title: str,
    ylabel: str,
    order: list[str] | None = None,
    negate: bool = False,
) -> Path:
    """Per-method bar chart (mean of the return column with 95% CI)."""
    names = order or sorted(tables)
    means, cis = [], []
    for name in names:
        values = [row.return_value for row in tables[name].rows]
        mean, ci = _mean_ci(values)
        means.append(-mean if negate else mean)
        cis.append(ci)
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    ax.bar(range(len(names)), means, yerr=cis, capsize=4, color="tab:blue", alpha=0.8)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.grid(True, axis="y", alpha=0.3)
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def render_figure(output) -> Path:
    """Render the chart for a reproduce run from its written CSVs."""
    tables = {
        method: read_result_csv(path) for method, path in output.csv_paths.items()
    }
    png = output.directory / f"{output.figure}.png"
    if output.figure == "tutoring-budget":
        return plot_curves(
            tables,
            png,
            title="Best policy found vs. exploration budget (tutoring)",
            xlabel="budget (trajectories)",
            ylabel="true value of selected policy",
            column="return",
            log_x=True,
        )
    if output.figure in ("tutoring-cumulative", "tutoring-augmented"):
        return plot_curves(
            tables,
            png,
            title="Average cumulative return per episode (tutoring)",
            xlabel="episode",
            ylabel="cumulative mean return",
        )
    if output.figure == "asset":
        return plot_curves(
            tables,
            png,
            title="Average cumulative return per episode (asset replacement)",
            xlabel="episode",
            ylabel="cumulative mean return",
        )
    if output.figure == "tickets":
        return plot_bars(
            tables,
            png,
            title="Mean expenditure on held-out synthetic fares",
            ylabel="mean expenditure",
            order=["best_possible", "ours_complex", "ours_simple", "earliest", "latest"],
            negate=True,
        )
    raise ValueError(f"no renderer for figure {output.figure!r}")
