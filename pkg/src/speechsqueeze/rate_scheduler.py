"""Piecewise-constant compression schedules.

A *rate* is input duration over output duration: rate 3 plays three times
faster. Four schedules are provided:

``L``
    one rate for the whole utterance.
``NL1``
    speech compressed, silence left untouched.
``NL2``
    speech at a given rate, silence at whatever single rate makes the whole
    utterance last ``target_total`` seconds.
``NL3``
    silence compressed ``Y`` times more than speech, with the total duration
    equal to the ``L`` schedule at the same overall rate.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import config
from .errors import InfeasibleScheduleError
from .segmenter import SILENCE, SPEECH, SegmentTrack

__all__ = [
    "METHODS",
    "RateMap",
    "MethodSpec",
    "ClassRates",
    "build_linear_map",
    "build_nl1_map",
    "build_nl2_map",
    "build_nl3_map",
    "build_map",
    "match_duration_rate",
    "nl3_rates",
    "summarize_map",
    "write_rate_map_csv",
]

METHODS = ("L", "NL1", "NL2", "NL3")


def _check_rate(rate, name="rate"):
    if not (isinstance(rate, (int, float)) and math.isfinite(rate) and rate > 0):
        raise ValueError(f"{name} must be a positive finite number, got {rate!r}")
    return float(rate)


def _round_half_up(value: Fraction) -> int:
    return math.floor(value + Fraction(1, 2))


@dataclass(frozen=True)
class RateMap:
    """Compression rate as a step function of the input sample index.

    Parameters
    ----------
    breakpoints : sequence of (start_sample, rate)
        Strictly increasing starts beginning at 0; each rate holds until the
        next start (or ``clip_length``).
    clip_length : int
        Input length in samples.

    Attributes
    ----------
    target_output_samples : int
        ``sum(span / rate)`` over all spans, rounded half up.
    """

    breakpoints: tuple
    clip_length: int
    target_output_samples: int = field(init=False)

    def __post_init__(self):
        bps = tuple((int(s), _check_rate(r)) for s, r in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if self.clip_length <= 0:
            raise ValueError("clip_length must be positive")
        if not bps or bps[0][0] != 0:
            raise ValueError("breakpoints must start at sample 0")
        starts = [s for s, _ in bps]
        if any(b <= a for a, b in zip(starts, starts[1:])) or starts[-1] >= self.clip_length:
            raise ValueError("breakpoint starts must be strictly increasing and inside the clip")
        target = _round_half_up(self.exact_output_length())
        if target <= 0:
            raise ValueError("schedule compresses the clip to zero samples")
        object.__setattr__(self, "target_output_samples", target)

    def spans(self):
        """Yield ``(start, end, rate)`` for every constant-rate span."""
        ends = [s for s, _ in self.breakpoints[1:]] + [self.clip_length]
        for (start, rate), end in zip(self.breakpoints, ends):
            yield start, end, rate

    def exact_output_length(self) -> Fraction:
        return sum(
            (Fraction(end - start) / Fraction(rate) for start, end, rate in self.spans()),
            Fraction(0),
        )

    @property
    def rates(self) -> list[float]:
        return [r for _, r in self.breakpoints]

    @property
    def max_rate(self) -> float:
        return max(self.rates)

    def rate_at(self, position: float) -> float:
        i = bisect.bisect_right(self._starts, position) - 1
        return self.breakpoints[max(i, 0)][1]

    @property
    def _starts(self):
        return [s for s, _ in self.breakpoints]

    def advance(self, position: float, output_samples: float) -> float:
        """Input position reached after producing ``output_samples`` from ``position``.

        Within a span this is ``position + output_samples * rate``; across
        breakpoints the rate of each span is applied to its own share. Past
        the end of the clip the last rate continues.
        """
        starts = self._starts
        i = max(bisect.bisect_right(starts, position) - 1, 0)
        remaining = float(output_samples)
        pos = float(position)
        while True:
            rate = self.breakpoints[i][1]
            if i + 1 < len(starts):
                capacity = (starts[i + 1] - pos) / rate
                if remaining > capacity:
                    remaining -= capacity
                    pos = float(starts[i + 1])
                    i += 1
                    continue
            return pos + remaining * rate


def build_linear_map(clip_length: int, rate: float) -> RateMap:
    """One rate for the whole clip."""
    return RateMap(((0, _check_rate(rate)),), clip_length)


def _map_from_track(track: SegmentTrack, rates: dict) -> RateMap:
    return RateMap(tuple((s.start, rates[s.label]) for s in track.segments), track.clip_length)


def build_nl1_map(track: SegmentTrack, speech_rate: float) -> RateMap:
    """Compress speech at ``speech_rate``; silence stays at rate 1."""
    return _map_from_track(track, {SPEECH: _check_rate(speech_rate, "speech_rate"), SILENCE: 1.0})


def build_nl2_map(
    track: SegmentTrack, speech_rate: float, target_total: float, sample_rate: int
) -> RateMap:
    """Speech at ``speech_rate``; silence at the one rate that hits ``target_total``.

    The silence rate solves ``Dsp / speech_rate + Dsil / r_sil = target_total``.

    Raises
    ------
    InfeasibleScheduleError
        When speech alone already needs ``target_total`` seconds or more, or
        when there is no silence to absorb a mismatch.
    """
    speech_rate = _check_rate(speech_rate, "speech_rate")
    if not (math.isfinite(target_total) and target_total > 0):
        raise ValueError(f"target_total must be positive, got {target_total!r}")
    dsp = track.speech_samples / sample_rate
    dsil = track.silence_samples / sample_rate
    speech_out = dsp / speech_rate
    if track.silence_samples == 0:
        if abs(target_total - speech_out) * sample_rate <= 0.5:
            return _map_from_track(track, {SPEECH: speech_rate, SILENCE: 1.0})
        raise InfeasibleScheduleError(
            f"no silence to adjust: speech alone lasts {speech_out:.6f} s, target is {target_total:.6f} s"
        )
    if not target_total > speech_out:
        raise InfeasibleScheduleError(
            f"target {target_total:.6f} s leaves no time for silence: "
            f"speech alone lasts {speech_out:.6f} s at rate {speech_rate:g}"
        )
    silence_rate = dsil / (target_total - speech_out)
    if not math.isfinite(silence_rate):
        raise InfeasibleScheduleError("silence rate diverges for this target")
    return _map_from_track(track, {SPEECH: speech_rate, SILENCE: silence_rate})


def nl3_rates(speech_seconds: float, silence_seconds: float, overall_rate: float, y: float):
    """Return ``(speech_rate, silence_rate)`` for the NL3 schedule.

    ``silence_rate == y * speech_rate`` and the output lasts
    ``(speech + silence) / overall_rate``.
    """
    overall_rate = _check_rate(overall_rate, "overall_rate")
    if not (math.isfinite(y) and y >= 1):
        raise ValueError(f"Y must be >= 1, got {y!r}")
    total = speech_seconds + silence_seconds
    if total <= 0:
        raise ValueError("empty track")
    speech_rate = overall_rate * (speech_seconds + silence_seconds / y) / total
    return speech_rate, y * speech_rate


def build_nl3_map(track: SegmentTrack, overall_rate: float, y: float = config.SILENCE_WEIGHT_Y) -> RateMap:
    """Compress silence ``y`` times more than speech at the linear total duration."""
    r_sp, r_sil = nl3_rates(track.speech_samples, track.silence_samples, overall_rate, y)
    return _map_from_track(track, {SPEECH: r_sp, SILENCE: r_sil})


def match_duration_rate(source_total: float, target_total: float) -> float:
    """Rate that turns a ``source_total`` second clip into ``target_total`` seconds."""
    if not (source_total > 0 and target_total > 0):
        raise ValueError("durations must be positive")
    return source_total / target_total


@dataclass(frozen=True)
class MethodSpec:
    """Parameters of one schedule; only the fields its method uses may be set."""

    method: str
    speech_rate: float | None = None
    overall_rate: float | None = None
    silence_weight_Y: float | None = None
    target_total_seconds: float | None = None

    _REQUIRED = {
        "L": {"overall_rate"},
        "NL1": {"speech_rate"},
        "NL2": {"speech_rate", "target_total_seconds"},
        "NL3": {"overall_rate", "silence_weight_Y"},
    }

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        given = {
            name
            for name in ("speech_rate", "overall_rate", "silence_weight_Y", "target_total_seconds")
            if getattr(self, name) is not None
        }
        need = self._REQUIRED[self.method]
        if given != need:
            missing = sorted(need - given)
            extra = sorted(given - need)
            parts = []
            if missing:
                parts.append("missing " + ", ".join(missing))
            if extra:
                parts.append("unexpected " + ", ".join(extra))
            raise ValueError(f"method {self.method}: " + "; ".join(parts))
        for name in given - {"target_total_seconds"}:
            _check_rate(getattr(self, name), name)
        if self.silence_weight_Y is not None and self.silence_weight_Y < 1:
            raise ValueError("silence_weight_Y must be >= 1")


def build_map(spec: MethodSpec, track: SegmentTrack, sample_rate: int) -> RateMap:
    if spec.method == "L":
        return build_linear_map(track.clip_length, spec.overall_rate)
    if spec.method == "NL1":
        return build_nl1_map(track, spec.speech_rate)
    if spec.method == "NL2":
        return build_nl2_map(track, spec.speech_rate, spec.target_total_seconds, sample_rate)
    return build_nl3_map(track, spec.overall_rate, spec.silence_weight_Y)


@dataclass(frozen=True)
class ClassRates:
    """Input-duration-weighted mean rate per class (``None`` if the class is absent)."""

    speech: float | None
    silence: float | None

    @property
    def silence_to_speech(self) -> float | None:
        if self.speech is None or self.silence is None:
            return None
        return self.silence / self.speech


def summarize_map(rate_map: RateMap, track: SegmentTrack) -> ClassRates:
    if rate_map.clip_length != track.clip_length:
        raise ValueError(
            f"rate map covers {rate_map.clip_length} samples but track covers {track.clip_length}"
        )
    weighted = {SPEECH: 0.0, SILENCE: 0.0}
    spans = list(rate_map.spans())
    j = 0
    for seg in track.segments:
        while spans[j][1] <= seg.start:
            j += 1
        k = j
        while k < len(spans) and spans[k][0] < seg.end:
            start, end, rate = spans[k]
            weighted[seg.label] += (min(end, seg.end) - max(start, seg.start)) * rate
            k += 1
    out = {}
    for label in (SPEECH, SILENCE):
        n = track.samples_of(label)
        out[label] = weighted[label] / n if n else None
    return ClassRates(out[SPEECH], out[SILENCE])


def write_rate_map_csv(rate_map: RateMap, sample_rate: int, path) -> None:
    """Write ``start_sec,rate`` rows."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["start_sec", "rate"])
        for start, rate in rate_map.breakpoints:
            writer.writerow([f"{start / sample_rate:.6f}", repr(rate)])
