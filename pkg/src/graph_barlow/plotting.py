"""Report figures written next to the JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 110,
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}


def plot_loss_history(history, path, evaluations=None, title=None):
    """Loss (left axis) and learning rate (right axis) per epoch."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if history:
            epochs = [h["epoch"] for h in history]
            ax.plot(epochs, [h["loss"] for h in history], color="C0", lw=1.2, label="loss")
            ax2 = ax.twinx()
            ax2.plot(epochs, [h["lr"] for h in history], color="C1", lw=1.0, ls="--", label="lr")
            ax2.set_ylabel("learning rate")
            ax2.spines["top"].set_visible(False)
        if evaluations:
            for ep, _ in evaluations:
                ax.axvline(ep, color="0.8", lw=0.8, zorder=0)
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        if title:
            ax.set_title(title)
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_grid_table(table, path, key="val_metric", title=None):
    """Heatmap of ``key`` over the ``(p_a, p_x)`` grid, best cell outlined."""
    pa = sorted({r["p_a"] for r in table})
    px = sorted({r["p_x"] for r in table})
    grid = np.full((len(pa), len(px)), np.nan)
    for r in table:
        grid[pa.index(r["p_a"]), px.index(r["p_x"])] = r[key]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.0 + 0.8 * len(px), 0.8 + 0.7 * len(pa)))
        im = ax.imshow(grid, cmap="viridis", origin="lower", aspect="auto")
        ax.set_xticks(range(len(px)), [f"{v:g}" for v in px])
        ax.set_yticks(range(len(pa)), [f"{v:g}" for v in pa])
        ax.set_xlabel("p_x (feature mask)")
        ax.set_ylabel("p_a (edge drop)")
        for i in range(len(pa)):
            for j in range(len(px)):
                if np.isfinite(grid[i, j]):
                    ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center", fontsize=7, color="w")
        bi, bj = np.unravel_index(np.nanargmax(grid), grid.shape)
        ax.add_patch(plt.Rectangle((bj - 0.5, bi - 0.5), 1, 1, fill=False, ec="red", lw=1.5))
        fig.colorbar(im, ax=ax, label=key)
        if title:
            ax.set_title(title)
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_split_scores(report, path, title=None):
    """Per-split test metric with the mean as a horizontal line."""
    scores = report["test_scores"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.0, 0.35 * len(scores) + 1.5), 3.0))
        ax.bar(range(len(scores)), scores, color="C0")
        ax.axhline(report["mean"], color="k", lw=1.0, label=f"mean {report['mean']:.3f}")
        ax.set_xlabel("split")
        ax.set_ylabel(report["metric"])
        ax.set_ylim(0, 1)
        ax.legend(loc="lower right")
        if title:
            ax.set_title(title)
        fig.savefig(path)
        plt.close(fig)
    return path
