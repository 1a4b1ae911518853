"""Figures written next to the CSV outputs (PNG, non-interactive backend)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _by_series(rows):
    series = {}
    for r in rows:
        series.setdefault(r.series, []).append(r)
    return series


def plot_curves(rows, path, ylabel, logy=False):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rs in _by_series(rows).items():
        m = np.array([r.m for r in rs])
        y = np.array([r.statistic for r in rs])
        se = np.array([r.stderr for r in rs])
        line, = ax.plot(m, y, marker="o", ms=3, label=name)
        ax.fill_between(m, y - se, y + se, color=line.get_color(), alpha=0.2, lw=0)
    ax.set_xlabel("number of measurements m")
    ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_fm_curve(rows, path):
    plot_curves(rows, path, "f(m)")


def plot_error_curve(rows, path):
    plot_curves(rows, path, "mean relative error", logy=True)


def plot_signal(g, x, path, title=None):
    """Scatter a graph signal over the vertex coordinates, edges underneath."""
    if g.coords is None:
        raise ValueError("graph has no coordinates to draw")
    xy = g.coords
    fig, ax = plt.subplots(figsize=(5, 5))
    segs = np.stack([xy[g.rows], xy[g.cols]], axis=1)
    from matplotlib.collections import LineCollection

    ax.add_collection(LineCollection(segs, colors="0.8", linewidths=0.4))
    sc = ax.scatter(xy[:, 0], xy[:, 1], c=x, s=12, cmap="coolwarm", zorder=2)
    fig.colorbar(sc, ax=ax, shrink=0.8)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_image_panel(panels, path):
    """``panels`` is a list of ``(title, 2-d array)``; uint8 arrays are drawn in gray."""
    cols = min(3, len(panels))
    rows = int(np.ceil(len(panels) / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 3.2 * rows), squeeze=False)
    for ax in axes.ravel():
        ax.set_axis_off()
    for ax, (title, img) in zip(axes.ravel(), panels):
        if img.dtype == np.uint8:
            ax.imshow(img, cmap="gray", vmin=0, vmax=255)
        else:
            ax.imshow(img, cmap="viridis")
        ax.set_title(title, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
