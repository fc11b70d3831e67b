"""Per-utterance and per-style timing statistics.

Speech and silence durations come from the energy segmenter. Words per
minute and syllables per second are computed over the whole utterance,
pauses included, and only when a transcript or a syllable count is given;
syllables are never estimated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .audio_io import AudioClip
from .segmenter import SegmenterConfig, class_durations, detect_segments

__all__ = [
    "UtteranceStats",
    "StyleStats",
    "CorpusStats",
    "DurationRatios",
    "ManifestRow",
    "analyze_utterance",
    "aggregate_corpus",
    "duration_ratios",
    "read_manifest",
    "ManifestError",
]

_OPTIONAL = ("word_count", "syllable_count", "words_per_minute", "syllables_per_second")


@dataclass(frozen=True)
class UtteranceStats:
    speech_seconds: float
    silence_seconds: float
    total_seconds: float
    word_count: int | None = None
    syllable_count: float | None = None
    words_per_minute: float | None = None
    syllables_per_second: float | None = None

    @classmethod
    def from_durations(cls, speech_seconds, silence_seconds, word_count=None, syllable_count=None):
        total = speech_seconds + silence_seconds
        wpm = sps = None
        if word_count is not None and total > 0:
            wpm = word_count / (total / 60.0)
        if syllable_count is not None and total > 0:
            sps = syllable_count / total
        return cls(speech_seconds, silence_seconds, total, word_count, syllable_count, wpm, sps)

    def to_dict(self):
        return asdict(self)


def analyze_utterance(
    clip: AudioClip,
    cfg: SegmenterConfig | None = None,
    transcript=None,
    syllables=None,
) -> UtteranceStats:
    """Speech/silence durations of ``clip`` plus optional speaking rates.

    Parameters
    ----------
    clip : AudioClip
    cfg : SegmenterConfig, optional
    transcript : str or sequence of str, optional
        Words spoken; only their count is used.
    syllables : number, optional
        Externally annotated syllable count.
    """
    track = detect_segments(clip, cfg)
    speech, silence = class_durations(track, clip.sample_rate)
    words = None
    if transcript is not None:
        if isinstance(transcript, str):
            transcript = transcript.split()
        words = len(list(transcript))
    return UtteranceStats.from_durations(speech, silence, words, syllables)


@dataclass(frozen=True)
class StyleStats:
    """Unweighted means over the utterances of one style."""

    count: int
    speech_seconds: float
    silence_seconds: float
    total_seconds: float
    word_count: float | None = None
    syllable_count: float | None = None
    words_per_minute: float | None = None
    syllables_per_second: float | None = None

    def as_utterance(self) -> UtteranceStats:
        return UtteranceStats(
            self.speech_seconds,
            self.silence_seconds,
            self.total_seconds,
            self.word_count,
            self.syllable_count,
            self.words_per_minute,
            self.syllables_per_second,
        )

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class CorpusStats:
    styles: dict  # style -> StyleStats, in first-seen order

    def __getitem__(self, style) -> StyleStats:
        return self.styles[style]


def _mean(values):
    values = [v for v in values if v is not None]
    return math.fsum(values) / len(values) if values else None


def aggregate_corpus(stats) -> CorpusStats:
    """Group ``(style, UtteranceStats)`` pairs by style and average each field.

    Optional fields are averaged over the utterances that carry them.
    """
    stats = list(stats)
    if not stats:
        raise ValueError("no utterances to aggregate")
    groups: dict = {}
    for style, utt in stats:
        groups.setdefault(style, []).append(utt)
    styles = {}
    for style, utts in groups.items():
        styles[style] = StyleStats(
            count=len(utts),
            speech_seconds=_mean(u.speech_seconds for u in utts),
            silence_seconds=_mean(u.silence_seconds for u in utts),
            total_seconds=_mean(u.total_seconds for u in utts),
            **{name: _mean(getattr(u, name) for u in utts) for name in _OPTIONAL},
        )
    return CorpusStats(styles)


@dataclass(frozen=True)
class DurationRatios:
    """``other / reference`` duration ratios.

    When ``other`` is shorter overall, ``compression`` holds the reciprocal
    triple ``reference / other``: how much faster the other style is.
    """

    speech: float
    silence: float | None
    total: float
    compression: tuple | None = None

    def rounded(self, digits: int = 2) -> dict:
        def r(v):
            return None if v is None else round(v, digits)

        out = {"speech": r(self.speech), "silence": r(self.silence), "total": r(self.total)}
        if self.compression is not None:
            out["compression"] = {
                "speech": r(self.compression[0]),
                "silence": r(self.compression[1]),
                "total": r(self.compression[2]),
            }
        return out


def duration_ratios(reference: UtteranceStats, other: UtteranceStats) -> DurationRatios:
    """How much longer (or shorter) ``other`` is than ``reference``, per class."""
    if reference.speech_seconds <= 0 or reference.silence_seconds <= 0:
        raise ValueError("reference speech and silence durations must be positive")
    speech = other.speech_seconds / reference.speech_seconds
    silence = other.silence_seconds / reference.silence_seconds
    total = other.total_seconds / reference.total_seconds
    compression = None
    if other.total_seconds < reference.total_seconds:
        compression = (
            1.0 / speech if speech else None,
            1.0 / silence if silence else None,
            1.0 / total,
        )
    return DurationRatios(speech, silence, total, compression)


class ManifestError(ValueError):
    """A corpus manifest row is malformed or points at a missing file."""


@dataclass(frozen=True)
class ManifestRow:
    line: int
    path: Path
    style: str
    transcript_path: Path | None = None
    syllable_count: float | None = None

    def transcript(self):
        if self.transcript_path is None:
            return None
        return self.transcript_path.read_text(encoding="utf-8").split()


def read_manifest(path) -> list[ManifestRow]:
    """Parse ``path,style[,transcript_path][,syllable_count]`` rows.

    A header row starting with ``path`` is skipped. Relative paths resolve
    against the manifest's directory. Errors name the offending line.
    """
    path = Path(path)
    base = path.parent
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            fields = [f.strip() for f in fields]
            if not fields or not any(fields) or fields[0].startswith("#"):
                continue
            if lineno == 1 and fields[0].lower() == "path":
                continue
            if len(fields) < 2 or not fields[0] or not fields[1]:
                raise ManifestError(f"{path}:{lineno}: expected 'path,style[,transcript_path][,syllable_count]'")
            if len(fields) > 4:
                raise ManifestError(f"{path}:{lineno}: too many columns ({len(fields)})")
            audio = base / fields[0]
            if not audio.is_file():
                raise ManifestError(f"{path}:{lineno}: audio file not found: {fields[0]}")
            transcript = None
            if len(fields) > 2 and fields[2]:
                transcript = base / fields[2]
                if not transcript.is_file():
                    raise ManifestError(f"{path}:{lineno}: transcript not found: {fields[2]}")
            syllables = None
            if len(fields) > 3 and fields[3]:
                try:
                    syllables = float(fields[3])
                except ValueError:
                    raise ManifestError(f"{path}:{lineno}: syllable_count is not a number: {fields[3]!r}") from None
                if syllables < 0:
                    raise ManifestError(f"{path}:{lineno}: negative syllable_count")
            rows.append(ManifestRow(lineno, audio, fields[1], transcript, syllables))
    if not rows:
        raise ManifestError(f"{path}: manifest has no rows")
    return rows
