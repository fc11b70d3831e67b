"""Acceptance criteria, one test each.

Every test prints and records an ``ACCEPTANCE n PASS/FAIL`` line; the lines
are repeated in the terminal summary by ``conftest.py``.
"""

import random
import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import conftest
from conftest import SR, clip_of, silence, tone
from speechsqueeze.audio_io import AudioClip
from speechsqueeze.corpus_stats import UtteranceStats, duration_ratios
from speechsqueeze.errors import InfeasibleScheduleError
from speechsqueeze.rate_scheduler import (
    build_linear_map,
    build_nl1_map,
    build_nl2_map,
    build_nl3_map,
    match_duration_rate,
    summarize_map,
)
from speechsqueeze.segmenter import SILENCE, SPEECH, Segment, SegmentTrack, detect_segments
from speechsqueeze.wer_scorer import WordErrorResult, aggregate_listeners, score_words
from speechsqueeze.wsola import WsolaParams, time_scale

HOP = WsolaParams().hop_samples(SR)
SEG_HOP = 160  # 10 ms at 16 kHz


class Record:
    def __init__(self):
        self.detail = ""


@contextmanager
def criterion(n):
    rec = Record()
    try:
        yield rec
    except BaseException as exc:
        line = f"ACCEPTANCE {n} FAIL: {exc}".splitlines()[0]
        conftest.ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"ACCEPTANCE {n} PASS: {rec.detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)


def speechlike(seconds, seed=0):
    rng = np.random.default_rng(seed)
    n = int(seconds * SR)
    t = np.arange(n) / SR
    f0 = 120 + 20 * np.sin(2 * np.pi * 0.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / SR
    x = sum(np.sin(k * phase) / k for k in range(1, 8))
    x = x * (0.6 + 0.4 * np.sin(2 * np.pi * 3 * t) ** 2) + 0.02 * rng.standard_normal(n)
    return AudioClip(0.9 * x / np.max(np.abs(x)), SR)


def dominant_bin(x, n=8192):
    seg = x[(len(x) - n) // 2 :][:n]
    return int(np.argmax(np.abs(np.fft.rfft(seg * np.hanning(n)))))


def track_of(*runs):
    segs, pos = [], 0
    for label, n in runs:
        segs.append(Segment(pos, pos + n, label))
        pos += n
    return SegmentTrack(tuple(segs), pos)


def test_1_duration_contract():
    with criterion(1) as rec:
        clip = speechlike(3.0)
        t0 = time.perf_counter()
        worst = 0.0
        for rate in (1.0, 1.55, 2.0, 2.5, 3.0):
            y, _ = time_scale(clip, build_linear_map(len(clip), rate))
            dev = abs(len(y) - len(clip) / rate)
            worst = max(worst, dev)
            assert dev <= HOP, f"rate {rate}: off by {dev} samples (hop {HOP})"
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"took {elapsed:.2f} s"
        rec.detail = f"max deviation {worst:.2f} samples <= {HOP}, {elapsed:.2f} s"


def test_2_pitch_preservation():
    with criterion(2) as rec:
        t0 = time.perf_counter()
        checked = 0
        for freq in (220.0, 440.0, 880.0):
            clip = clip_of(tone(3.0, freq=freq, amp=0.8))
            want = dominant_bin(clip.samples)
            for rate in (2.0, 3.0):
                y, _ = time_scale(clip, build_linear_map(len(clip), rate))
                got = dominant_bin(y.samples)
                assert got == want, f"{freq} Hz at {rate}x: bin {got}, expected {want}"
                checked += 1
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"took {elapsed:.2f} s"
        rec.detail = f"{checked} tone/rate pairs keep their bin, {elapsed:.2f} s"


def test_3_identity_passthrough():
    with criterion(3) as rec:
        clip = speechlike(2.0, seed=4)
        y, _ = time_scale(clip, build_linear_map(len(clip), 1.0), WsolaParams(tolerance_ms=0))
        frame = WsolaParams().resolve(SR)[0]
        inner = slice(frame, len(clip) - frame)
        err = float(np.max(np.abs(y.samples[inner] - clip.samples[inner])))
        assert len(y) == len(clip)
        assert err <= 1e-6, f"max interior error {err:.3g}"
        rec.detail = f"max interior error {err:.3g}"


def test_4_ratio_oracle():
    with criterion(4) as rec:
        normal = UtteranceStats.from_durations(1.63, 0.14)
        cases = {
            "clear h": (UtteranceStats.from_durations(2.13, 0.43), (1.3, 3.1)),
            "clear c": (UtteranceStats.from_durations(2.88, 1.16), (1.76, 8.29)),
            "fast": (UtteranceStats.from_durations(0.97, 0.02), (1.68, 7.0)),
        }
        parts = []
        for style, (stats, (sp, sil)) in cases.items():
            r = duration_ratios(normal, stats)
            got = r.compression[:2] if r.compression else (r.speech, r.silence)
            assert got[0] == pytest.approx(sp, abs=0.05), f"{style} speech {got[0]:.3f}"
            assert got[1] == pytest.approx(sil, abs=0.05), f"{style} silence {got[1]:.3f}"
            parts.append(f"{style} ({got[0]:.2f}, {got[1]:.2f})")
        rec.detail = ", ".join(parts)


def test_5_nl3_closed_form():
    with criterion(5) as rec:
        rng = np.random.default_rng(5)
        worst = 0
        for _ in range(1000):
            sp = int(rng.integers(1, 5 * SR))
            sil = int(rng.integers(1, 3 * SR))
            rate = float(rng.uniform(1, 4))
            y = float(rng.uniform(1, 4))
            track = track_of((SPEECH, sp), (SILENCE, sil))
            m = build_nl3_map(track, rate, y)
            r_sp, r_sil = m.rate_at(0), m.rate_at(sp)
            assert r_sil == y * r_sp, f"r_sil {r_sil} != Y*r_sp {y * r_sp}"
            lin = build_linear_map(sp + sil, rate).target_output_samples
            worst = max(worst, abs(m.target_output_samples - lin))
            assert worst <= 1, f"target {m.target_output_samples} vs linear {lin}"
        normal = track_of((SPEECH, round(1.63 * SR)), (SILENCE, round(0.14 * SR)))
        r_sp = build_nl3_map(normal, 3.0, 2.0).rate_at(0)
        assert r_sp == pytest.approx(2.8814, abs=1e-3), f"worked example r_sp {r_sp}"
        rec.detail = f"1000 instances, max target gap {worst} sample(s); worked r_sp {r_sp:.4f}"


def test_6_nl2_feasibility():
    seen = {"ok": 0, "infeasible": 0}

    @settings(max_examples=400, deadline=None, derandomize=True)
    @given(st.integers(1, 4 * SR), st.integers(1, 2 * SR), st.floats(1.0, 4.0), st.floats(0.01, 6.0))
    def prop(sp, sil, speech_rate, target):
        track = track_of((SPEECH, sp), (SILENCE, sil))
        feasible = target > (sp / SR) / speech_rate
        try:
            m = build_nl2_map(track, speech_rate, target, SR)
        except InfeasibleScheduleError:
            assert not feasible, f"rejected feasible target {target} (speech {sp}, rate {speech_rate})"
            seen["infeasible"] += 1
            return
        assert feasible, f"accepted infeasible target {target}"
        assert abs(m.target_output_samples - target * SR) <= 1
        seen["ok"] += 1

    with criterion(6) as rec:
        prop()
        # realized output on real audio
        for seconds, target in ((1.2, 0.8), (2.0, 0.9), (0.9, 0.6)):
            clip = clip_of(tone(seconds * 0.7), silence(seconds * 0.3))
            track = detect_segments(clip)
            m = build_nl2_map(track, 2.0, target, SR)
            y, _ = time_scale(clip, m)
            assert abs(len(y) - target * SR) <= 1, f"realized {len(y)} vs {target * SR}"
        rec.detail = f"{seen['ok']} feasible, {seen['infeasible']} infeasible cases agree; realized within 1 sample"


def test_7_segmentation_oracle():
    with criterion(7) as rec:
        rng = np.random.default_rng(7)
        hits = 0
        n = 200
        for _ in range(n):
            a, gap, b = rng.uniform(0.2, 1.0, 3)
            f1, f2 = rng.uniform(100, 1000, 2)
            x = np.concatenate([
                tone(a, freq=f1, phase=rng.uniform(0, 2 * np.pi)),
                silence(gap),
                tone(b, freq=f2, phase=rng.uniform(0, 2 * np.pi)),
            ])
            e1, e2 = round(a * SR), round(a * SR) + round(gap * SR)
            track = detect_segments(AudioClip(x, SR))
            bounds = track.boundaries()
            if len(bounds) == 2 and abs(bounds[0] - e1) <= SEG_HOP and abs(bounds[1] - e2) <= SEG_HOP:
                hits += 1
            assert detect_segments(AudioClip(0.1 * x, SR)) == track, "gain 0.1 changed the track"
        assert hits >= 0.99 * n, f"only {hits}/{n} recovered"
        rec.detail = f"{hits}/{n} instances within one hop; gain 0.1 tracks identical"


def test_8_end_to_end_table_replica():
    with criterion(8) as rec:
        clip = clip_of(tone(1.63), silence(0.14))
        track = detect_segments(clip)
        maps = {
            "L": build_linear_map(len(clip), 3.0),
            "NL1": build_nl1_map(track, 3.0),
            "NL3": build_nl3_map(track, 3.0, 2.0),
        }
        expect = {"L": 0.590, "NL1": 0.683, "NL3": 0.590}
        got = {}
        for name, m in maps.items():
            y, _ = time_scale(clip, m)
            got[name] = len(y) / SR
            assert abs(got[name] - expect[name]) <= HOP / SR, f"{name}: {got[name]:.4f} s"
        ratio = summarize_map(maps["NL3"], track).silence_to_speech
        assert ratio == pytest.approx(2.0, rel=1e-9), f"NL3 ratio {ratio}"
        rec.detail = ", ".join(f"{k} {v:.3f} s" for k, v in got.items()) + f"; NL3 ratio {ratio:.6f}"


def test_9_wer_metric():
    with criterion(9) as rec:
        ref = "the old brown horse walked slowly across the wide field"
        hyp = "the old brwn horse walkd slowly across a wide feeld".split()
        base = score_words(ref, " ".join(hyp)).error_count
        rnd = random.Random(9)
        for _ in range(100):
            h = list(hyp)
            rnd.shuffle(h)
            assert score_words(ref, " ".join(h)).error_count == base, "shuffle changed the score"
        fuzzy = score_words("the black cat", "the blak dog").error_count
        assert fuzzy == 1, f"fuzzy example gave {fuzzy}"
        agg = aggregate_listeners([
            ("a", "N-L", WordErrorResult(10, 1)),
            ("b", "N-L", WordErrorResult(10, 3)),
            ("a", "C-NL3", WordErrorResult(10, 2)),
            ("a", "C-NL3", WordErrorResult(10, 4)),
            ("b", "C-NL3", WordErrorResult(10, 0)),
        ])
        assert abs(agg["N-L"].mean_percent - 20.0) <= 1e-9
        assert abs(agg["N-L"].stdev_percent - 200 ** 0.5) <= 1e-9
        assert abs(agg["C-NL3"].mean_percent - 15.0) <= 1e-9
        assert abs(agg["C-NL3"].stdev_percent - 450 ** 0.5) <= 1e-9
        rec.detail = f"100 shuffles all {base} errors; fuzzy example 1 error; aggregates exact"


def test_10_over_compression_warning():
    with criterion(10) as rec:
        clip = clip_of(tone(2.13), silence(0.43))
        rate = match_duration_rate(clip.duration, 0.59)
        y, report = time_scale(clip, build_linear_map(len(clip), rate))
        assert round(rate, 2) == 4.34, f"rate {rate}"
        assert any("exceeds 4.0x" in w for w in report.warnings), f"warnings {report.warnings}"
        assert abs(len(y) / SR - 0.59) <= HOP / SR
        rec.detail = f"rate {rate:.2f} warns: {report.warnings[0]}"
