"""SVG emission for two-dimensional direction sets and log-space clouds.

Three-dimensional results stay in CSV; the drawing helpers refuse them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .amoeba import DirectionCloud, PointCloud  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "troplim"

_SVG_META = {"Date": None}


def plot_directions(cloud: DirectionCloud, path, title: str | None = None) -> None:
    """Rays of a direction set drawn on the unit circle."""
    vecs = np.asarray(cloud.vectors, dtype=float)
    if vecs.size and vecs.shape[1] != 2:
        raise ValueError("SVG direction plots are two-dimensional only")
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    theta = np.linspace(0.0, 2.0 * np.pi, 256)
    ax.plot(np.cos(theta), np.sin(theta), lw=0.8, color="0.75")
    for v in vecs:
        ax.plot([0.0, v[0]], [0.0, v[1]], color="tab:red", lw=1.4)
        ax.plot([v[0]], [v[1]], marker="o", color="tab:red", ms=3)
    if cloud.origin_member:
        ax.plot([0.0], [0.0], marker="o", color="tab:red", ms=5)
    ax.set_aspect("equal")
    ax.set_xlim(-1.2, 1.2)
    ax.set_ylim(-1.2, 1.2)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_amoeba(cloud: PointCloud, path, title: str | None = None) -> None:
    """Scatter of a log-space cloud."""
    pts = np.asarray(cloud.points, dtype=float)
    if pts.size and pts.shape[1] != 2:
        raise ValueError("SVG amoeba plots are two-dimensional only")
    if cloud.space != "log":
        raise ValueError("amoeba plots expect a log-space cloud")
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    if pts.size:
        ax.scatter(pts[:, 0], pts[:, 1], s=2.0, color="tab:blue", alpha=0.5,
                   linewidths=0)
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    label = title if title else (f"t = {cloud.t:g}" if cloud.t else None)
    if label:
        ax.set_title(label)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
