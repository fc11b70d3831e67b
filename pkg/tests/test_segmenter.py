import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SR, clip_of, silence, tone
from speechsqueeze.audio_io import AudioClip
from speechsqueeze.segmenter import (
    SILENCE,
    SPEECH,
    Segment,
    SegmenterConfig,
    SegmentTrack,
    class_durations,
    detect_segments,
    write_segments_csv,
)

HOP = int(SegmenterConfig().hop_ms * SR / 1000)


def check_track(track, n):
    segs = track.segments
    assert segs[0].start == 0 and segs[-1].end == n
    for a, b in zip(segs, segs[1:]):
        assert a.end == b.start
        assert a.label != b.label
    assert track.speech_samples + track.silence_samples == n


def test_all_zero_is_silence():
    track = detect_segments(AudioClip(np.zeros(SR), SR))
    assert [(s.start, s.end, s.label) for s in track.segments] == [(0, SR, SILENCE)]


def test_continuous_tone_is_speech():
    track = detect_segments(clip_of(tone(1.0)))
    assert [(s.start, s.end, s.label) for s in track.segments] == [(0, SR, SPEECH)]


def test_tone_silence_tone_boundaries():
    clip = clip_of(tone(0.5), silence(0.3), tone(0.5))
    track = detect_segments(clip)
    assert [s.label for s in track.segments] == [SPEECH, SILENCE, SPEECH]
    b1, b2 = track.boundaries()
    assert abs(b1 - 0.5 * SR) <= HOP
    assert abs(b2 - 0.8 * SR) <= HOP
    sp, sil = class_durations(track, SR)
    assert abs(sp - 1.0) <= HOP / SR
    assert abs(sil - 0.3) <= HOP / SR
    assert track.speech_samples + track.silence_samples == len(clip)
    assert sp + sil == pytest.approx(clip.duration, abs=1 / SR)


def test_class_durations_simple():
    one = SegmentTrack((Segment(0, 16000, SPEECH),), 16000)
    assert class_durations(one, 16000) == (1.0, 0.0)
    quiet = SegmentTrack((Segment(0, 8000, SILENCE),), 8000)
    assert class_durations(quiet, 16000) == (0.0, 0.5)


def test_too_short_clip():
    with pytest.raises(ValueError, match="shorter than one"):
        detect_segments(AudioClip(np.zeros(100), SR))


def test_short_silence_absorbed():
    clip = clip_of(tone(0.3), silence(0.03), tone(0.3))
    track = detect_segments(clip)
    assert len(track.segments) == 1 and track.segments[0].label == SPEECH


def test_short_leading_run_joins_following():
    # 20 ms click before a long pause: the click becomes part of the pause
    clip = clip_of(tone(0.02), silence(0.4), tone(0.3))
    track = detect_segments(clip, SegmenterConfig(min_speech_ms=40))
    assert [s.label for s in track.segments] == [SILENCE, SPEECH]


def test_zero_min_runs_keep_everything():
    clip = clip_of(tone(0.3), silence(0.04), tone(0.3))
    track = detect_segments(clip, SegmenterConfig(min_silence_ms=0, min_speech_ms=0))
    assert [s.label for s in track.segments] == [SPEECH, SILENCE, SPEECH]


def test_track_validation():
    with pytest.raises(ValueError):
        SegmentTrack((Segment(0, 5, SPEECH), Segment(6, 10, SILENCE)), 10)
    with pytest.raises(ValueError):
        SegmentTrack((Segment(0, 5, SPEECH), Segment(5, 10, SPEECH)), 10)
    with pytest.raises(ValueError):
        SegmentTrack((Segment(0, 5, SPEECH),), 10)
    with pytest.raises(ValueError):
        Segment(3, 3, SPEECH)
    with pytest.raises(ValueError):
        Segment(0, 3, "vowel")


def test_config_validation():
    with pytest.raises(ValueError):
        SegmenterConfig(frame_ms=5, hop_ms=10)
    with pytest.raises(ValueError):
        SegmenterConfig(threshold_db=0)
    with pytest.raises(ValueError):
        SegmenterConfig(min_silence_ms=-1)


def test_csv_export(tmp_path):
    track = SegmentTrack((Segment(0, 8000, SPEECH), Segment(8000, 12800, SILENCE)), 12800)
    p = tmp_path / "s.csv"
    write_segments_csv(track, 16000, p)
    assert p.read_text() == "start_sec,end_sec,label\n0.000000,0.500000,speech\n0.500000,0.800000,silence\n"


# Random piecewise signals: bursts of noise at assorted levels, including
# near-threshold ones, separated by digital silence or quiet noise.
piece = st.tuples(st.floats(0.005, 0.4), st.sampled_from([0.0, 1e-4, 0.003, 0.01, 0.1, 1.0]))


def build(pieces, seed):
    rng = np.random.default_rng(seed)
    parts = [level * rng.uniform(-1, 1, int(dur * SR)) for dur, level in pieces]
    x = np.concatenate(parts)
    if x.size < 400:
        x = np.concatenate([x, np.zeros(400 - x.size)])
    return AudioClip(x, SR)


@settings(max_examples=60, deadline=None)
@given(st.lists(piece, min_size=1, max_size=8), st.integers(0, 2**16))
def test_track_invariants(pieces, seed):
    clip = build(pieces, seed)
    track = detect_segments(clip)
    check_track(track, len(clip))


@settings(max_examples=40, deadline=None)
@given(st.lists(piece, min_size=1, max_size=8), st.integers(0, 2**16), st.integers(-6, 6))
def test_gain_invariance_dyadic(pieces, seed, k):
    clip = build(pieces, seed)
    g = 2.0 ** k
    x = clip.samples * g
    if np.max(np.abs(x)) > 1.0:
        x = clip.samples / 2.0 ** abs(k)
    assert detect_segments(AudioClip(x, SR)) == detect_segments(clip)


@pytest.mark.parametrize("g", [0.1, 0.37, 0.9])
def test_gain_invariance_constructed(g):
    parts = (tone(0.4), silence(0.25), tone(0.6, freq=300), silence(0.1), tone(0.2))
    a = detect_segments(clip_of(*parts))
    b = detect_segments(clip_of(*(g * p for p in parts)))
    assert a == b


@settings(max_examples=60, deadline=None)
@given(st.lists(piece, min_size=1, max_size=8), st.integers(0, 2**16),
       st.floats(-70, -1), st.floats(-70, -1))
def test_threshold_monotonic(pieces, seed, t1, t2):
    lo, hi = sorted((t1, t2))
    clip = build(pieces, seed)
    quiet = detect_segments(clip, SegmenterConfig(threshold_db=lo)).silence_samples
    loud = detect_segments(clip, SegmenterConfig(threshold_db=hi)).silence_samples
    assert loud >= quiet


def test_deterministic():
    clip = build([(0.2, 1.0), (0.1, 0.003), (0.3, 0.1)], 3)
    assert detect_segments(clip) == detect_segments(clip)
