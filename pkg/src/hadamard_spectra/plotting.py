"""Figures for reports, rendered off-screen to files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
})


def _save(fig, path):
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_attractor(points: np.ndarray, path, title: str = "") -> None:
    pts = np.asarray(points, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 4.5 if pts.shape[1] > 1 else 2.5))
    if pts.shape[1] == 1:
        ax.hist(pts[:, 0], bins=min(512, max(16, len(pts) // 8)), color="0.2")
        ax.set_xlabel("x")
        ax.set_ylabel("count")
    else:
        ax.scatter(pts[:, 0], pts[:, 1], s=0.3, c="k", linewidths=0)
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_partial_sums(report, path) -> None:
    """S_N(xi) over the certification grid, one line per truncation level."""
    grid = np.asarray(report.grid)
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    if grid.shape[1] == 1:
        x = grid[:, 0]
        ax.set_xlabel("xi")
    else:
        x = np.arange(len(grid))
        ax.set_xlabel("grid index")
    for N, s in zip(report.levels, report.partial_sums):
        ax.plot(x, s, marker=".", ms=3, lw=0.8, label=f"N = {N}")
    ax.axhline(1.0, color="0.5", lw=0.6, ls="--")
    ax.set_ylabel("partial sum")
    ax.legend(frameon=False)
    _save(fig, path)


def plot_spectrum(points: np.ndarray, path, title: str = "") -> None:
    pts = np.asarray(points, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 4.5 if pts.shape[1] > 1 else 1.8))
    if pts.shape[1] == 1:
        ax.vlines(pts[:, 0], 0, 1, color="k", lw=0.5)
        ax.set_yticks([])
        ax.set_xlabel("lambda")
    else:
        ax.scatter(pts[:, 0], pts[:, 1], s=1.5, c="k", linewidths=0)
        ax.set_xlabel("lambda1")
        ax.set_ylabel("lambda2")
    if title:
        ax.set_title(title)
    _save(fig, path)
