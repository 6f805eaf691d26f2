"""Histogram figure. Output is byte-deterministic for identical data."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

ENACTED_COLOR = "#d62728"
BAR_COLOR = "#9e9e9e"


def histogram_svg(rows, path: str | Path, label: str = "") -> None:
    """Bar chart of ``(seat, frequency, marker)`` rows; the enacted bar is red.

    Each bar is an SVG group with id ``seat-<n>``, and the enacted one is
    ``seat-<n>-enacted``.
    """
    seats = [r[0] for r in rows]
    freqs = [r[1] for r in rows]
    with plt.rc_context({"svg.hashsalt": "districtkit", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        bars = ax.bar(seats, freqs, width=0.8, color=BAR_COLOR, edgecolor="black", linewidth=0.5)
        for bar, (seat, _, marker) in zip(bars, rows):
            if marker == "enacted":
                bar.set_color(ENACTED_COLOR)
                bar.set_edgecolor("black")
                bar.set_gid(f"seat-{seat}-enacted")
            else:
                bar.set_gid(f"seat-{seat}")
        ax.set_xticks(seats)
        ax.set_xlabel("Democratic seats won")
        ax.set_ylabel("Plans in ensemble")
        if label:
            ax.set_title(label)
        ax.set_ylim(0, max(freqs) * 1.05 if max(freqs) > 0 else 1)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
