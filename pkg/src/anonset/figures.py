"""Figure rendering for report outputs.

Every report command writes delimited data first; these helpers render the
same numbers to PNG next to it.  All figures go through Agg and carry fixed
metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 120, "metadata": {"Software": "anonset"}}


def _finish(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_boxplot(
    path: str | Path,
    labels: Sequence[str],
    stats_rows: Sequence[dict],
    title: str,
    ylabel: str = "anonymity set size",
    log_y: bool = True,
) -> None:
    """Box plot from precomputed quartile/whisker rows (no raw samples)."""
    boxes = []
    for label, s in zip(labels, stats_rows):
        boxes.append(
            {
                "label": label,
                "whislo": s["whisker_lo"],
                "q1": s["q25"],
                "med": s["q50"],
                "q3": s["q75"],
                "whishi": s["whisker_hi"],
                "fliers": [],
            }
        )
    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(boxes), 4.2))
    ax.bxp(boxes, showfliers=False)
    if log_y:
        ax.set_yscale("log")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    _finish(fig, path)


def save_count_hist(
    path: str | Path,
    bin_edges: np.ndarray,
    counts: np.ndarray,
    title: str,
    xlabel: str,
    log_x: bool = False,
    log_y: bool = True,
) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    widths = np.diff(bin_edges)
    ax.bar(bin_edges[:-1], counts, width=widths, align="edge", edgecolor="none")
    if log_x:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("payments")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    _finish(fig, path)


def save_sweep(
    path: str | Path,
    hop_times: Sequence[int],
    series: dict[str, dict[str, list[float]]],
    title: str,
) -> None:
    """Median lines with interquartile bands per metric over hop times."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, qs in sorted(series.items()):
        ax.plot(hop_times, qs["q50"], marker="o", label=name)
        ax.fill_between(hop_times, qs["q25"], qs["q75"], alpha=0.2)
    ax.set_xlabel("hop time (ticks)")
    ax.set_ylabel("anonymity set size")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    _finish(fig, path)


def save_cover_curve(path: str | Path, gains: Sequence[int], total: int, title: str) -> None:
    """Cumulative fraction of payments observed as cover nodes are added."""
    cum = np.cumsum(gains) / max(total, 1)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.step(np.arange(1, len(cum) + 1), cum, where="post")
    ax.set_xlabel("honest nodes picked")
    ax.set_ylabel("fraction of multi-hop payments observed")
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    _finish(fig, path)
