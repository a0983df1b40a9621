"""Figures rendered next to the sweep and throughput CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _style(ax):
    ax.grid(True, which="both", alpha=0.3, linewidth=0.5)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)


def plot_sweep(report, path) -> Path:
    """File size and element count against density, log-log."""
    path = Path(path)
    d = [r.density_percent for r in report.rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(d, [r.file_bytes / 1024 for r in report.rows], "o-", label="file size [KiB]")
    ax.loglog(d, [r.element_count for r in report.rows], "s--", label="elements")
    ax.set_xlabel("density [%]")
    ax.set_title("4DSRT footprint vs. density")
    ax.legend(frameon=False)
    _style(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_throughput(reports, path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 4))
    modes = [r.mode for r in reports]
    fps = [r.frames_per_second for r in reports]
    bars = ax.bar(modes, fps, color=["#b0413e", "#2a6f97"][: len(modes)])
    ax.set_yscale("log")
    ax.set_ylabel("frames / s")
    ratio = reports[0].speedup_ratio
    ax.set_title(f"offline/online = {ratio:.1f}x (reference {reports[0].reference_speedup_ratio:.1f}x)")
    ax.bar_label(bars, fmt="%.3g")
    _style(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
