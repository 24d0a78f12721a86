"""Figure rendering for experiment reports.

Each function draws one figure from a measure matrix or derived table and
writes it to a file next to the delimited output. Uses the Agg backend so
reports render in headless batch runs.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import MeasureMatrix, Table

__all__ = [
    "significance_bars",
    "correlation_heatmap",
    "measure_scatter",
    "render_standard_figures",
]

_MEASURE_LABELS = {
    "nrank_ind": "independence",
    "nrank_cov": "pairwise",
    "nrank_all": "all subsets",
    "nrank_tree": "best tree",
    "nrank_greedy": "greedy family",
    "freq": "frequency",
    "brin": "chi-squared",
    "cs": "collective strength",
}


def significance_bars(table: Table, path: str | Path) -> Path:
    """Grouped bars: fraction of significant itemsets per size and measure."""
    path = Path(path)
    sizes = [c for c in table.columns[1:] if c != "All"]
    measures = [row[0] for row in table.rows]
    width = 0.8 / max(len(measures), 1)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    xs = np.arange(len(sizes))
    for i, row in enumerate(table.rows):
        vals = [v if isinstance(v, float) else np.nan for v in row[1 : 1 + len(sizes)]]
        ax.bar(
            xs + (i - (len(measures) - 1) / 2) * width,
            vals,
            width=width,
            label=_MEASURE_LABELS.get(row[0], row[0]),
        )
    alpha = table.meta.get("alpha")
    if alpha is not None:
        ax.axhline(alpha, color="grey", linestyle=":", linewidth=1)
    ax.set_xticks(xs, sizes)
    ax.set_xlabel("itemset size")
    ax.set_ylabel("fraction significant")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=8, ncols=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def correlation_heatmap(table: Table, path: str | Path) -> Path:
    """Pairwise Pearson correlations between measures as a heatmap."""
    path = Path(path)
    names = list(table.columns[1:])
    n = len(names)
    grid = np.full((n, n), np.nan)
    for i, row in enumerate(table.rows):
        for j, v in enumerate(row[1:]):
            if isinstance(v, float):
                grid[i, j] = v
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(grid, vmin=-1, vmax=1, cmap="RdBu_r")
    ax.set_xticks(range(n), names, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(n), names, fontsize=8)
    for i in range(n):
        for j in range(n):
            if not math.isnan(grid[i, j]):
                ax.text(
                    j, i, f"{grid[i, j]:.2f}", ha="center", va="center", fontsize=7
                )
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def measure_scatter(
    mm: MeasureMatrix, x_measure: str, y_measure: str, path: str | Path
) -> Path:
    """Scatter of one measure against another, colored by itemset size."""
    path = Path(path)
    xs = np.array(mm.columns[x_measure])
    ys = np.array(mm.columns[y_measure])
    sizes = np.array(mm.sizes)
    keep = np.isfinite(xs) & np.isfinite(ys)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    sc = ax.scatter(xs[keep], ys[keep], c=sizes[keep], s=12, cmap="viridis", alpha=0.7)
    ax.set_xlabel(_MEASURE_LABELS.get(x_measure, x_measure))
    ax.set_ylabel(_MEASURE_LABELS.get(y_measure, y_measure))
    fig.colorbar(sc, ax=ax, label="size", shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_standard_figures(
    mm: MeasureMatrix,
    significance: Table,
    correlations: Table,
    out_dir: str | Path,
) -> list[Path]:
    """The default report figure set; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        significance_bars(significance, out_dir / "significance.png"),
        correlation_heatmap(correlations, out_dir / "correlations.png"),
    ]
    for x, y in (("brin", "nrank_ind"), ("freq", "nrank_all"), ("nrank_tree", "nrank_greedy")):
        if x in mm.columns and y in mm.columns:
            written.append(
                measure_scatter(mm, x, y, out_dir / f"scatter_{y}_vs_{x}.png")
            )
    return written
