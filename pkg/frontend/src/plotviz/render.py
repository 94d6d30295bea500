"""Matplotlib rendering; each render function also returns the plotted data
so callers (and tests) can cross-check the figure against the inputs.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .data import JointPdfGrid, load_joint_pdf, load_training_log, moving_average


def render_heatmap(csv_paths: list[str | Path], out_png: str | Path,
                   titles: list[str] | None = None) -> list[JointPdfGrid]:
    """One heatmap panel per input CSV, side by side, shared color scale."""
    grids = [load_joint_pdf(p) for p in csv_paths]
    if titles is None:
        titles = [Path(p).parent.name or Path(p).stem for p in csv_paths]
    vmax = max(float(g.density.max()) for g in grids) or 1.0
    fig, axes = plt.subplots(1, len(grids), figsize=(5.5 * len(grids), 4.5),
                             squeeze=False)
    for ax, grid, title in zip(axes[0], grids, titles):
        mesh = ax.pcolormesh(grid.latency_edges, grid.bler_edges, grid.density,
                             cmap="viridis", vmin=0.0, vmax=vmax)
        ax.set_xlabel("packet latency (ms)")
        ax.set_ylabel("BLER")
        ax.set_title(title)
        fig.colorbar(mesh, ax=ax, label="probability density")
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return grids


def render_training_curve(csv_path: str | Path, out_png: str | Path,
                          window: int = 100):
    """Raw revenue plus its trailing moving average vs training cycle."""
    cycles, revenues = load_training_log(csv_path)
    avg = moving_average(revenues, window)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(cycles, revenues, lw=0.5, alpha=0.4, label="revenue")
    ax.plot(cycles, avg, lw=1.8, label=f"{window}-cycle moving average")
    ax.set_xlabel("training cycle")
    ax.set_ylabel("network operating revenue")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return cycles, revenues, avg
