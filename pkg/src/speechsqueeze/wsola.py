"""Variable-rate WSOLA time-scale modification.

Output frames are laid down every synthesis hop. For each frame the input
read pointer advances by one hop's worth of input under the rate map, and
the excerpt actually copied is shifted by up to ``tolerance`` samples so it
best resembles the natural continuation of the previous excerpt. Frames are
tapered and normalized by the summed window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import config
from .audio_io import AudioClip
from .rate_scheduler import RateMap

__all__ = ["WsolaParams", "TimeScaleReport", "time_scale", "best_offset", "make_window"]


def make_window(name: str, length: int) -> np.ndarray:
    """Periodic tapering window of ``length`` samples."""
    n = np.arange(length)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / length)
    if name == "sine":
        return np.sin(np.pi * (n + 0.5) / length)
    raise ValueError(f"unknown window {name!r}")


@dataclass(frozen=True)
class WsolaParams:
    frame_ms: float = config.WSOLA_FRAME_MS
    overlap_fraction: float = config.WSOLA_OVERLAP
    tolerance_ms: float = config.WSOLA_TOLERANCE_MS
    window: str = config.WSOLA_WINDOW

    def __post_init__(self):
        if not 0.0 < self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must lie strictly between 0 and 1")
        if self.tolerance_ms < 0:
            raise ValueError("tolerance_ms must be non-negative")
        make_window(self.window, 16)

    def resolve(self, sample_rate: int) -> tuple[int, int, int]:
        """Return ``(frame, hop, tolerance)`` in samples, validating them."""
        frame = int(round(self.frame_ms * sample_rate / 1000.0))
        if frame < 16:
            raise ValueError(f"frame of {frame} samples is too short (minimum 16)")
        hop = int(round(frame * (1.0 - self.overlap_fraction)))
        if not 0 < hop <= frame:
            raise ValueError("overlap_fraction leaves no synthesis hop")
        tol = int(round(self.tolerance_ms * sample_rate / 1000.0))
        if tol >= frame:
            raise ValueError("tolerance must be shorter than the frame")
        return frame, hop, tol

    def hop_samples(self, sample_rate: int) -> int:
        return self.resolve(sample_rate)[1]


@dataclass
class TimeScaleReport:
    input_samples: int
    output_samples: int
    target_output_samples: int
    synthesis_hop: int
    realized_overall_rate: float
    max_local_rate: float
    warnings: list = field(default_factory=list)
    nominal_positions: np.ndarray = field(default=None, repr=False)
    read_positions: np.ndarray = field(default=None, repr=False)


def best_offset(reference, candidate_region, tolerance: int) -> int:
    """Shift in ``[-tolerance, tolerance]`` of best normalized cross-correlation.

    ``candidate_region[tolerance + d : tolerance + d + len(reference)]`` is the
    excerpt at shift ``d``. Ties go to the smallest ``|d|``, then to the
    negative shift. A silent reference, or a silent excerpt, scores zero.
    """
    ref = np.asarray(reference, dtype=np.float64)
    region = np.asarray(candidate_region, dtype=np.float64)
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    if region.size < ref.size + 2 * tolerance:
        raise ValueError(
            f"candidate region of {region.size} samples cannot hold a "
            f"{ref.size}-sample reference at +/-{tolerance}"
        )
    ref_energy = float(np.dot(ref, ref))
    if tolerance == 0 or ref_energy == 0.0:
        return 0
    windows = sliding_window_view(region[: ref.size + 2 * tolerance], ref.size)
    corr = windows @ ref
    energy = np.einsum("ij,ij->i", windows, windows)
    score = np.zeros_like(corr)
    live = energy > 0
    score[live] = corr[live] / np.sqrt(energy[live] * ref_energy)
    offsets = np.arange(-tolerance, tolerance + 1)
    best = np.flatnonzero(score == score.max())
    # lexicographic (|d|, d): nearest shift first, negative side on a tie
    order = np.lexsort((offsets[best], np.abs(offsets[best])))
    return int(offsets[best[order[0]]])


def time_scale(clip: AudioClip, rate_map: RateMap, params: WsolaParams | None = None):
    """Change the duration of ``clip`` following ``rate_map`` without changing pitch.

    Parameters
    ----------
    clip : AudioClip
    rate_map : RateMap
        Must span exactly ``len(clip)`` samples.
    params : WsolaParams, optional

    Returns
    -------
    (AudioClip, TimeScaleReport)
        The output has ``rate_map.target_output_samples`` samples at the input
        sample rate.
    """
    params = params or WsolaParams()
    n = len(clip)
    if n == 0:
        raise ValueError("cannot time-scale an empty clip")
    if rate_map.clip_length != n:
        raise ValueError(
            f"rate map spans {rate_map.clip_length} samples but the clip has {n}"
        )
    frame, hop, tol = params.resolve(clip.sample_rate)
    window = make_window(params.window, frame)
    out_len = rate_map.target_output_samples

    # nominal read positions, one per synthesis frame
    positions = [0.0]
    while True:
        nxt = rate_map.advance(positions[-1], hop)
        if nxt >= n:
            break
        positions.append(nxt)
    n_frames = len(positions)

    pad_left = tol
    pad_right = frame + hop + tol + int(np.ceil(rate_map.max_rate * hop))
    x = np.concatenate((np.zeros(pad_left), clip.samples, np.zeros(pad_right)))

    buf_len = (n_frames - 1) * hop + frame
    y = np.zeros(max(buf_len, out_len))
    wsum = np.zeros_like(y)

    reads = np.empty(n_frames, dtype=np.int64)
    prev = None
    for k, pos in enumerate(positions):
        nominal = int(round(pos)) + pad_left
        if prev is None or tol == 0:
            start = nominal
        else:
            ref = x[prev + hop : prev + hop + frame]
            region = x[nominal - tol : nominal + frame + tol]
            start = nominal + best_offset(ref, region, tol)
        out = k * hop
        y[out : out + frame] += x[start : start + frame] * window
        wsum[out : out + frame] += window
        reads[k] = start - pad_left
        prev = start

    # Interior normalization uses the summed window; the last frame fades out
    # instead of being boosted back up where fewer frames overlap.
    cola = window.sum() / hop
    last = (n_frames - 1) * hop
    divisor = wsum.copy()
    divisor[last:] = np.maximum(divisor[last:], cola)
    nz = divisor > 1e-12
    y[nz] /= divisor[nz]
    y[~nz] = 0.0
    y = np.clip(y[:out_len], -1.0, 1.0)

    report = TimeScaleReport(
        input_samples=n,
        output_samples=out_len,
        target_output_samples=rate_map.target_output_samples,
        synthesis_hop=hop,
        realized_overall_rate=n / out_len,
        max_local_rate=rate_map.max_rate,
        nominal_positions=np.asarray(positions),
        read_positions=reads,
    )
    if report.max_local_rate > config.RATE_WARNING:
        report.warnings.append(
            f"local compression rate {report.max_local_rate:.2f}x exceeds "
            f"{config.RATE_WARNING:.1f}x; WSOLA artefacts are likely"
        )
    return AudioClip(y, clip.sample_rate), report
