"""Matplotlib figures written alongside the CLI's delimited outputs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .evaluate import ConfusionMatrix, NeighborhoodCurves
from .render import PALETTE


def sweep_figure(rows: list[dict], path: str | os.PathLike) -> None:
    """Error-vs-lambda curves for a sweep."""
    lams = [r["lambda"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(lams, [100 * r["q_knn_error"] for r in rows], "o-",
            color=PALETTE[0], label="neighbor error [%]")
    ax.plot(lams, [100 * r["q_data_error"] for r in rows], "s-",
            color=PALETTE[1], label="background error [%]")
    ax.set_xlabel("lambda (unsupervised weight)")
    ax.set_ylabel("percent error")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def curves_figure(curves: dict[tuple[str, str], NeighborhoodCurves],
                  path: str | os.PathLike) -> None:
    """Shared-neighbor and above-chance curves for each compared pair."""
    fig, (ax_q, ax_l) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    for idx, ((name_a, name_b), c) in enumerate(curves.items()):
        color = PALETTE[idx % len(PALETTE)]
        label = f"{name_a} vs {name_b} (AUC {c.auc:.2f})"
        ax_q.plot(c.ks, c.q_nn, color=color, label=label)
        ax_l.plot(c.ks, c.lcmc, color=color)
    ax_q.set_ylabel("shared-neighbor fraction")
    ax_q.legend(loc="lower right", fontsize=8)
    ax_q.grid(True, alpha=0.3)
    ax_l.set_xlabel("neighborhood size k")
    ax_l.set_ylabel("above chance")
    ax_l.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def confusion_figure(cm: ConfusionMatrix, path: str | os.PathLike) -> None:
    """Annotated heatmap of a confusion matrix."""
    counts = cm.counts
    n = counts.shape[0]
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * n, 0.8 + 0.8 * n))
    im = ax.imshow(counts, cmap="Blues")
    threshold = counts.max() / 2 if counts.max() else 0.5
    for i in range(n):
        for j in range(n):
            ax.text(j, i, str(counts[i, j]), ha="center", va="center",
                    color="white" if counts[i, j] > threshold else "black", fontsize=9)
    ax.set_xticks(np.arange(n), cm.class_names, rotation=45, ha="right")
    ax.set_yticks(np.arange(n), cm.class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def scene_figure(payload: dict, path: str | os.PathLike) -> None:
    """Quick raster preview of a payload (the SVG renderer is the
    authoritative output; this exists for notebook-style inspection)."""
    grid = payload["grid"]
    w, h = int(grid["width"]), int(grid["height"])
    labels = np.asarray(grid["labels"]).reshape(h, w)
    certainty = np.asarray(grid["certainty"]).reshape(h, w)
    x0, y0, dx, dy = (float(grid[k]) for k in ("x0", "y0", "dx", "dy"))
    extent = (x0, x0 + w * dx, y0, y0 + h * dy)

    rgb = np.ones((h, w, 3))
    for c in np.unique(labels):
        color = matplotlib.colors.to_rgb(PALETTE[int(c) % len(PALETTE)])
        mask = labels == c
        for ch in range(3):
            rgb[..., ch][mask] = 1.0 + (color[ch] - 1.0) * certainty[mask]

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(rgb, origin="lower", extent=extent, interpolation="nearest")
    for p in payload["points"]:
        label = int(p.get("true_label", p["predicted"]))
        ax.plot(p["x"], p["y"], "o", ms=4, color=PALETTE[label % len(PALETTE)])
        if p.get("mismatch"):
            ax.plot(p["x"], p["y"], "o", ms=10, mfc="none",
                    mec=PALETTE[int(p["predicted"]) % len(PALETTE)])
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
