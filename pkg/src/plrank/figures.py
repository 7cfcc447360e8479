"""Figure rendering for depth maps, training traces, and evaluation reports.

Everything draws through the Agg backend and writes PNG files, so the
report path works on headless machines. Each helper owns its figure and
closes it after saving.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .depth import DepthMap

__all__ = [
    "save_depth_heatmap",
    "save_nll_trace",
    "save_report_chart",
    "save_rmse_curve",
]


def save_depth_heatmap(depth, path, title: str | None = None) -> None:
    """Heatmap of a depth map or raw 2-D grid; masked pixels render gray."""
    if isinstance(depth, DepthMap):
        values = depth.values.astype(np.float64)
        values = np.where(depth.mask, values, np.nan)
    else:
        values = np.asarray(depth, dtype=np.float64)
    cmap = matplotlib.colormaps["viridis"].copy()
    cmap.set_bad("lightgray")
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    image = ax.imshow(values, cmap=cmap, origin="upper", interpolation="nearest")
    fig.colorbar(image, ax=ax, label="depth")
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_nll_trace(trace, path, title: str | None = None) -> None:
    """Mean ranking NLL against the epoch counter."""
    trace = np.asarray(trace, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    ax.plot(np.arange(trace.size), trace, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean NLL")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_rmse_curve(rows, path, title: str | None = None) -> None:
    """Post-fit RMSE against ranking count from (num_rankings, seed, rmse) rows.

    Individual seeds scatter; the per-count mean draws as a line. Both axes
    are logarithmic because counts usually span decades.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("need at least one experiment row")
    counts = np.array([r[0] for r in rows], dtype=np.float64)
    rmses = np.array([r[2] for r in rows], dtype=np.float64)
    unique = np.unique(counts)
    means = np.array([rmses[counts == c].mean() for c in unique])
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    ax.scatter(counts, rmses, s=18, alpha=0.5, label="seeds")
    ax.plot(unique, means, marker="o", lw=1.5, color="tab:red", label="mean")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("rankings observed")
    ax.set_ylabel("post-fit RMSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_report_chart(reports, path, title: str | None = None) -> None:
    """2x2 bar panel (ordinal error, nDCG, RMSE, delta) per labeled report."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one labeled report")
    labels = [label for label, _ in reports]
    panels = [
        ("ordinal error", [r.ordinal_error for _, r in reports]),
        ("nDCG", [r.ndcg for _, r in reports]),
        ("RMSE", [r.rmse for _, r in reports]),
        ("% with ratio > 1.25", [r.delta_gt_1_25 for _, r in reports]),
    ]
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.0))
    positions = np.arange(len(labels))
    for ax, (name, values) in zip(axes.ravel(), panels):
        ax.bar(positions, values, width=0.6)
        ax.set_xticks(positions)
        ax.set_xticklabels(labels, rotation=20, ha="right")
        ax.set_title(name)
        ax.grid(True, axis="y", alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
