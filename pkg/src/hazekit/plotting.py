"""Report figures, rendered with the object-oriented matplotlib API.

No pyplot state is touched, so these are safe to call from worker threads
and never open a window.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .report import METRIC_KEYS, clean_number

_LABELS = {"e": "e", "r_bar": r"$\bar r$", "sigma": r"$\sigma$ (%)", "alpha_dc": r"$\alpha$", "beta_hl": r"$\beta$"}
# strip the matplotlib version stamp so figures are byte-stable
_PNG_META = {"Software": None}


def _new_figure(width=8.0, height=None, **kw):
    golden = (np.sqrt(5) - 1.0) / 2.0
    fig = Figure(figsize=(width, height or width * golden), facecolor="w", **kw)
    FigureCanvasAgg(fig)
    return fig


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    return path


def plot_neglected_terms(names, scores, path, mean=None) -> Path:
    """Per-pair mean of min-channel(clean) x transmission, with the grand mean."""
    fig = _new_figure(8.0)
    ax = fig.add_subplot(111)
    x = np.arange(1, len(scores) + 1)
    ax.plot(x, scores, "o-", ms=4, lw=1, color="tab:blue", label="per pair")
    if mean is not None:
        ax.axhline(mean, color="tab:red", ls="--", lw=1, label=f"mean = {mean:.4f}")
    ax.set_xlabel("image pair")
    ax.set_ylabel(r"mean of $\min_c J^c \cdot t$")
    ax.set_ylim(0, max(0.3, max(scores, default=0) * 1.2))
    if len(names) <= 20:
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_metric_bars(labels, metrics, path) -> Path:
    """One panel per metric, one bar per assessed pair."""
    fig = _new_figure(11.0, 3.2)
    axes = fig.subplots(1, len(METRIC_KEYS))
    x = np.arange(len(labels))
    for ax, key in zip(axes, METRIC_KEYS):
        vals = [clean_number(m.get(key)) if m else None for m in metrics]
        heights = [np.nan if v is None else v for v in vals]
        ax.bar(x, heights, color="0.4", width=0.6)
        ax.set_title(_LABELS[key])
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=6)
        ax.tick_params(axis="y", labelsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_dehaze_panel(hazy, result, path) -> Path:
    """Hazy input, recovered radiance, transmission and K map side by side."""
    fig = _new_figure(12.0, 3.4)
    axes = fig.subplots(1, 4)
    panels = [
        (hazy, "(a) input", None),
        (result.radiance, "(b) recovered", None),
        (result.transmission, "(c) transmission", (0, 1)),
        (result.k_map, "(d) K map", (0, 1)),
    ]
    for ax, (img, title, lim) in zip(axes, panels):
        if img.ndim == 2:
            ax.imshow(img, cmap="gray", vmin=lim[0], vmax=lim[1])
        else:
            ax.imshow(np.clip(img, 0, 1))
        ax.set_title(title, fontsize=9)
        ax.set_axis_off()
    fig.tight_layout()
    return _save(fig, path)
