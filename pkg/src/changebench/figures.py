"""Matplotlib rendering of the report data: per-method box plots and pairwise
significance grids, written as PNG files next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap

from .grid import ExperimentGrid
from .stats import PairwiseTestReport

plt.rcParams["figure.dpi"] = 120
plt.rcParams["font.size"] = 8
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3


def render_box_plot(scores: dict, title: str, ylabel: str, path: Path) -> None:
    """One box per method, drawn from its raw observation values."""
    methods = list(scores)
    data = [list(scores[m].values()) for m in methods]
    width = max(6.0, 0.45 * len(methods) + 2.0)
    fig, ax = plt.subplots(figsize=(width, 4.2))
    ax.boxplot(data, tick_labels=methods, showmeans=True)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=90)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_significance_grid(report: PairwiseTestReport, title: str, path: Path) -> None:
    """Green cell: no significant difference at the Bonferroni cutoff;
    red cell: significant difference."""
    m = len(report.methods)
    fig, ax = plt.subplots(figsize=(max(5.0, 0.4 * m + 2.0),) * 2)
    cmap = ListedColormap(["#2e9e4f", "#c23b22"])
    grid = report.significant.astype(int)
    np.fill_diagonal(grid, 0)
    ax.imshow(grid, cmap=cmap, vmin=0, vmax=1)
    ax.set_xticks(range(m), report.methods, rotation=90)
    ax.set_yticks(range(m), report.methods)
    ax.set_title(f"{title}\ncutoff = {report.cutoff:.3g} "
                 f"({report.significant_pair_count()}/{report.n_pairs} significant)")
    ax.grid(False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_report_figures(grid: ExperimentGrid, comparisons: dict, out_dir) -> list[Path]:
    out = Path(out_dir)
    written: list[Path] = []
    if not grid.records:
        return written
    axes = (("classifiers", "classifier"), ("feature-sets", "feature_set"))
    for axis, label in axes:
        for measure, short, pretty in (("accuracy", "accuracy", "Accuracy (%)"),
                                       ("f_measure", "fmeasure", "F-measure")):
            scores = grid.observations(axis, measure)
            if not any(scores.values()):
                continue
            path = out / f"box_{short}_by_{label}.png"
            render_box_plot(scores, f"{pretty} by {label.replace('_', ' ')}", pretty, path)
            written.append(path)
            if axis in comparisons:
                sig_path = out / f"significance_{label}_{short}.png"
                render_significance_grid(
                    comparisons[axis][measure],
                    f"Pairwise Bonferroni-corrected tests ({pretty})", sig_path)
                written.append(sig_path)
    return written
