"""Matplotlib renderings of patterns and coherence series.

Figures are drawn on an Agg canvas without touching pyplot state, so the
functions are safe to call from worker threads.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from decolab.analytic import IntensityProfile

# Strip the software/date stamps so repeated renders are byte-identical.
_PNG_METADATA = {"Software": None}


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)


def plot_profile(profile: IntensityProfile, path, *, title: Optional[str] = None,
                 show_envelope: bool = True, x_scale: float = 1e6) -> None:
    """Pattern versus screen position (micrometres by default)."""
    fig = Figure(figsize=(8, 5))
    ax = fig.add_subplot()
    x = np.asarray(profile.x) * x_scale
    ax.plot(x, profile.intensity, lw=1.2, label="pattern")
    if show_envelope and profile.envelope is not None:
        ax.plot(x, profile.envelope, lw=1.0, ls="--", color="0.5", label="incoherent sum")
        ax.legend(loc="upper right", frameon=False)
    unit = {1e6: "µm", 1e3: "mm", 1.0: "m"}.get(x_scale, f"m × {x_scale:g}")
    ax.set_xlabel(f"x ({unit})")
    ax.set_ylabel("intensity (normalized)" if profile.normalization == "peak-normalized"
                  else "intensity (1/m)")
    if title:
        ax.set_title(title)
    ax.set_xlim(x.min(), x.max())
    fig.tight_layout()
    _save(fig, path)


def plot_series(param: Sequence[float], values: Sequence[float], path, *, xlabel: str,
                ylabel: str = "coherence C", title: Optional[str] = None, logy: bool = False) -> None:
    fig = Figure(figsize=(8, 5))
    ax = fig.add_subplot()
    ax.plot(param, values, marker="o", ms=3, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
