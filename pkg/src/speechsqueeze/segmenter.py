"""Speech/silence segmentation with a fixed, clip-relative energy threshold."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import config
from .audio_io import AudioClip

__all__ = [
    "SPEECH",
    "SILENCE",
    "Segment",
    "SegmentTrack",
    "SegmenterConfig",
    "detect_segments",
    "class_durations",
    "frame_rms",
    "write_segments_csv",
]

SPEECH = "speech"
SILENCE = "silence"
_LABELS = (SPEECH, SILENCE)


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    label: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty segment [{self.start}, {self.end})")
        if self.label not in _LABELS:
            raise ValueError(f"unknown segment label {self.label!r}")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SegmentTrack:
    """Ordered speech/silence runs tiling ``[0, clip_length)``.

    Construction validates the tiling: contiguous, exhaustive and with
    alternating labels.
    """

    segments: tuple
    clip_length: int

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if self.clip_length <= 0 or not segs:
            raise ValueError("a segment track needs at least one segment")
        if segs[0].start != 0 or segs[-1].end != self.clip_length:
            raise ValueError("segments must cover [0, clip_length)")
        for prev, nxt in zip(segs, segs[1:]):
            if nxt.start != prev.end:
                raise ValueError(f"gap or overlap at sample {prev.end}")
            if nxt.label == prev.label:
                raise ValueError(f"adjacent segments share label {prev.label!r} at {prev.end}")

    @classmethod
    def from_mask(cls, silent: np.ndarray) -> "SegmentTrack":
        """Build the maximal-run track of a per-sample boolean silence mask."""
        silent = np.asarray(silent, dtype=bool)
        edges = np.flatnonzero(np.diff(silent.astype(np.int8))) + 1
        bounds = np.concatenate(([0], edges, [silent.size]))
        segs = [
            Segment(int(a), int(b), SILENCE if silent[a] else SPEECH)
            for a, b in zip(bounds[:-1], bounds[1:])
        ]
        return cls(tuple(segs), int(silent.size))

    def samples_of(self, label: str) -> int:
        return sum(s.length for s in self.segments if s.label == label)

    @property
    def speech_samples(self) -> int:
        return self.samples_of(SPEECH)

    @property
    def silence_samples(self) -> int:
        return self.samples_of(SILENCE)

    def boundaries(self) -> list[int]:
        """Interior change points, in samples."""
        return [s.start for s in self.segments[1:]]


@dataclass(frozen=True)
class SegmenterConfig:
    frame_ms: float = config.SEGMENT_FRAME_MS
    hop_ms: float = config.SEGMENT_HOP_MS
    threshold_db: float = config.SEGMENT_THRESHOLD_DB
    min_silence_ms: float = config.MIN_SILENCE_MS
    min_speech_ms: float = config.MIN_SPEECH_MS

    def __post_init__(self):
        if not (self.frame_ms >= self.hop_ms > 0):
            raise ValueError("need frame_ms >= hop_ms > 0")
        if not self.threshold_db < 0:
            raise ValueError("threshold_db must be negative")
        if self.min_silence_ms < 0 or self.min_speech_ms < 0:
            raise ValueError("minimum run lengths must be non-negative")

    def frame_samples(self, sample_rate: int) -> tuple[int, int]:
        frame = max(1, int(round(self.frame_ms * sample_rate / 1000.0)))
        hop = max(1, int(round(self.hop_ms * sample_rate / 1000.0)))
        return frame, min(hop, frame)


def _frame_starts(n: int, frame: int, hop: int) -> np.ndarray:
    starts = np.arange(0, n - frame + 1, hop)
    # The tail shorter than a hop gets its own end-aligned frame.
    if starts[-1] + frame < n:
        starts = np.append(starts, n - frame)
    return starts


def frame_rms(x: np.ndarray, frame: int, hop: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(starts, rms)`` over frames of ``x``.

    Frames start every ``hop`` samples; one extra frame is aligned to the end
    of the signal when the regular grid would leave samples uncovered.
    """
    starts = _frame_starts(x.size, frame, hop)
    windows = sliding_window_view(x, frame)[starts]
    return starts, np.sqrt(np.mean(windows * windows, axis=1))


def _merge_short_runs(runs: list[list], min_len: dict) -> list[list]:
    # runs are [label, start, end]; a short run joins its predecessor, or its
    # successor when it's the first run.
    while len(runs) > 1:
        short = next(
            (i for i, (lab, a, b) in enumerate(runs) if b - a < min_len[lab]), None
        )
        if short is None:
            break
        if short == 0:
            runs[1][1] = runs[0][1]
            del runs[0]
            continue
        runs[short - 1][2] = runs[short][2]
        del runs[short]
        if short < len(runs) and runs[short][0] == runs[short - 1][0]:
            runs[short - 1][2] = runs[short][2]
            del runs[short]
    return runs


def detect_segments(clip: AudioClip, cfg: SegmenterConfig | None = None) -> SegmentTrack:
    """Label every sample of ``clip`` as speech or silence.

    A frame is silent when its RMS falls more than ``|threshold_db|`` below
    the loudest frame of the clip, so the result does not depend on recording
    gain. A sample is silent when any silent frame covers it; runs shorter
    than the configured minima are then absorbed into their neighbour.

    Parameters
    ----------
    clip : AudioClip
    cfg : SegmenterConfig, optional
        Defaults from :mod:`speechsqueeze.config`.

    Returns
    -------
    SegmentTrack

    Raises
    ------
    ValueError
        If the clip is shorter than one analysis frame.
    """
    cfg = cfg or SegmenterConfig()
    sr = clip.sample_rate
    frame, hop = cfg.frame_samples(sr)
    n = len(clip)
    if n < frame:
        raise ValueError(
            f"clip of {n} samples is shorter than one {cfg.frame_ms} ms analysis frame ({frame} samples)"
        )
    starts, rms = frame_rms(clip.samples, frame, hop)
    peak = rms.max()
    if peak == 0.0:
        silent_frames = np.ones(rms.size, dtype=bool)
    else:
        silent_frames = rms < peak * 10.0 ** (cfg.threshold_db / 20.0)

    cover = np.zeros(n + 1, dtype=np.int64)
    np.add.at(cover, starts[silent_frames], 1)
    np.add.at(cover, starts[silent_frames] + frame, -1)
    mask = np.cumsum(cover[:-1]) > 0

    track = SegmentTrack.from_mask(mask)
    min_len = {
        SILENCE: int(round(cfg.min_silence_ms * sr / 1000.0)),
        SPEECH: int(round(cfg.min_speech_ms * sr / 1000.0)),
    }
    runs = _merge_short_runs([[s.label, s.start, s.end] for s in track.segments], min_len)
    return SegmentTrack(tuple(Segment(a, b, lab) for lab, a, b in runs), n)


def class_durations(track: SegmentTrack, sample_rate: int) -> tuple[float, float]:
    """Speech and silence durations in seconds."""
    return track.speech_samples / sample_rate, track.silence_samples / sample_rate


def write_segments_csv(track: SegmentTrack, sample_rate: int, path) -> None:
    """Write ``start_sec,end_sec,label`` rows with six decimals."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["start_sec", "end_sec", "label"])
        for seg in track.segments:
            writer.writerow(
                [f"{seg.start / sample_rate:.6f}", f"{seg.end / sample_rate:.6f}", seg.label]
            )
