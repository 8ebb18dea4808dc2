"""Figure output: probability histograms and input/map/feature triptychs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _to_hwc(image) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float32)
    return arr[0] if arr.shape[0] == 1 else arr.transpose(1, 2, 0)


def plot_histogram(histogram, title, path) -> Path:
    """Bar panel of one probability histogram; heights equal the counts."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    edges = histogram.edges()
    lefts = [left for left, _ in edges]
    width = 1.0 / histogram.bins
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(lefts, histogram.counts, width=width, align="edge",
           edgecolor="black", linewidth=0.5)
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("probability")
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_histogram_grid(histograms, path, ncols=2) -> Path:
    """One grid figure: histograms is an ordered {title: Histogram}."""
    if not histograms:
        raise ValueError("no histograms to plot")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    items = list(histograms.items())
    nrows = (len(items) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols,
                             figsize=(4 * ncols, 2.6 * nrows),
                             squeeze=False)
    for k, (title, hist) in enumerate(items):
        ax = axes[k // ncols][k % ncols]
        lefts = [left for left, _ in hist.edges()]
        ax.bar(lefts, hist.counts, width=1.0 / hist.bins, align="edge",
               edgecolor="black", linewidth=0.5)
        ax.set_xlim(0.0, 1.0)
        ax.set_title(title, fontsize=9)
    for k in range(len(items), nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_triptych(image, amap, feature, path, title=None) -> Path:
    """Input image, attribution map, and masked feature side by side."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(1, 3, figsize=(7.5, 2.8))
    axes[0].imshow(_to_hwc(image), vmin=0.0, vmax=1.0,
                   cmap="gray" if np.asarray(image).shape[0] == 1 else None)
    axes[0].set_title("input")
    hm = axes[1].imshow(np.asarray(amap.data), vmin=0.0, vmax=1.0,
                        cmap="viridis")
    axes[1].set_title(f"map ({amap.method})")
    fig.colorbar(hm, ax=axes[1], fraction=0.046)
    axes[2].imshow(_to_hwc(feature.data), vmin=0.0, vmax=1.0,
                   cmap="gray" if feature.data.shape[0] == 1 else None)
    axes[2].set_title("features")
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
