"""Figures written next to the CSV/JSON reports.

Every function renders to a file and returns its path. Figures are built on
bare :class:`matplotlib.figure.Figure` objects with the Agg canvas, so no
global pyplot state is touched and worker processes can plot in parallel.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .segmenter import SILENCE, SPEECH

__all__ = [
    "plot_segments",
    "plot_rate_map",
    "plot_style_timings",
    "plot_condition_errors",
]

PALETTE = {SPEECH: "#3b6ea5", SILENCE: "#d9a441"}
FIGSIZE = (7.0, 3.2)
DPI = 120


def _new_figure(figsize=FIGSIZE):
    fig = Figure(figsize=figsize, dpi=DPI)
    FigureCanvasAgg(fig)
    return fig


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # No timestamp/software metadata, so reruns give identical files.
    metadata = {"Software": None} if path.suffix.lower() == ".png" else None
    fig.savefig(path, metadata=metadata)
    return path


def _shade_silence(ax, track, sample_rate):
    for seg in track.segments:
        if seg.label == SILENCE:
            ax.axvspan(seg.start / sample_rate, seg.end / sample_rate,
                       color=PALETTE[SILENCE], alpha=0.25, lw=0)


def plot_segments(clip, track, path, title=None) -> Path:
    """Waveform with detected silence shaded."""
    fig = _new_figure()
    ax = fig.add_subplot(111)
    t = np.arange(len(clip)) / clip.sample_rate
    ax.plot(t, clip.samples, color=PALETTE[SPEECH], lw=0.5)
    _shade_silence(ax, track, clip.sample_rate)
    ax.set_xlim(0, clip.duration)
    ax.set_ylim(-1.05, 1.05)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("amplitude")
    ax.set_title(title or "speech/silence segmentation")
    return _save(fig, path)


def plot_rate_map(rate_map, sample_rate, path, track=None, title=None) -> Path:
    """Step plot of the compression rate over input time."""
    fig = _new_figure()
    ax = fig.add_subplot(111)
    edges, rates = [], []
    for start, end, rate in rate_map.spans():
        edges.append(start / sample_rate)
        rates.append(rate)
    edges.append(rate_map.clip_length / sample_rate)
    ax.stairs(rates, edges, color="k", lw=1.2, baseline=None)
    if track is not None:
        _shade_silence(ax, track, sample_rate)
    ax.set_xlim(0, edges[-1])
    ax.set_ylim(0, max(rates) * 1.15)
    ax.set_xlabel("input time (s)")
    ax.set_ylabel("rate (x)")
    ax.set_title(title or "compression schedule")
    return _save(fig, path)


def plot_style_timings(corpus, path, title=None) -> Path:
    """Stacked mean speech and silence duration per speaking style."""
    styles = list(corpus.styles)
    speech = [corpus[s].speech_seconds for s in styles]
    silence = [corpus[s].silence_seconds for s in styles]
    fig = _new_figure(figsize=(max(3.5, 1.2 * len(styles) + 2), 3.2))
    ax = fig.add_subplot(111)
    x = np.arange(len(styles))
    ax.bar(x, speech, color=PALETTE[SPEECH], label="speech")
    ax.bar(x, silence, bottom=speech, color=PALETTE[SILENCE], label="silence")
    ax.set_xticks(x, styles)
    ax.set_ylabel("mean duration (s)")
    ax.legend(frameon=False)
    ax.set_title(title or "timing per style")
    return _save(fig, path)


def plot_condition_errors(aggregate, path, title=None) -> Path:
    """Mean word error per condition with across-listener standard deviation bars."""
    conds = [c.condition for c in aggregate.conditions]
    means = [c.mean_percent for c in aggregate.conditions]
    stdevs = [c.stdev_percent for c in aggregate.conditions]
    fig = _new_figure(figsize=(max(3.5, 0.9 * len(conds) + 2), 3.2))
    ax = fig.add_subplot(111)
    x = np.arange(len(conds))
    ax.bar(x, means, yerr=stdevs, capsize=3, color="0.6", ecolor="k")
    ax.set_xticks(x, conds, rotation=30 if len(conds) > 5 else 0)
    ax.set_ylabel("word errors (%)")
    ax.set_ylim(0, 100)
    ax.set_title(title or "word errors per condition")
    return _save(fig, path)
