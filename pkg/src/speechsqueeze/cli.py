"""Command-line interface.

Subcommands
-----------
analyze   speech/silence statistics for one file or a corpus manifest
segments  export the speech/silence track of one file as CSV
compress  time-compress one file under an L/NL1/NL2/NL3 schedule
batch     compress every file of a manifest
score     placement-irrespective word errors of listener transcriptions
ratios    duration ratios between styles of an analyze report

Exit status: 0 success, 1 internal contract violation, 2 usage error,
3 input or format error, 4 infeasible schedule.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import config
from .audio_io import load_wav, read_wav_header, save_wav
from .corpus_stats import (
    ManifestError,
    UtteranceStats,
    aggregate_corpus,
    analyze_utterance,
    duration_ratios,
    read_manifest,
)
from .errors import AudioFormatError, ContractViolation, InfeasibleScheduleError
from .rate_scheduler import (
    METHODS,
    MethodSpec,
    build_map,
    match_duration_rate,
    summarize_map,
    write_rate_map_csv,
)
from .segmenter import SegmenterConfig, class_durations, detect_segments, write_segments_csv
from .wer_scorer import (
    OutlierPolicy,
    ScoringConfig,
    ScoringInputError,
    aggregate_listeners,
    load_contractions,
    read_references,
    read_responses,
    score_words,
)
from .wsola import WsolaParams, time_scale

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INFEASIBLE = 4


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


# -- shared option groups ----------------------------------------------------

def _add_segmenter_options(p):
    g = p.add_argument_group("segmentation")
    g.add_argument("--frame-ms", type=float, default=config.SEGMENT_FRAME_MS,
                   help="analysis frame length in ms (default: %(default)s)")
    g.add_argument("--hop-ms", type=float, default=config.SEGMENT_HOP_MS,
                   help="analysis hop in ms (default: %(default)s)")
    g.add_argument("--threshold-db", type=float, default=config.SEGMENT_THRESHOLD_DB,
                   help="silence threshold in dB below the loudest frame (default: %(default)s)")
    g.add_argument("--min-silence-ms", type=float, default=config.MIN_SILENCE_MS,
                   help="shortest silence run kept (default: %(default)s)")
    g.add_argument("--min-speech-ms", type=float, default=config.MIN_SPEECH_MS,
                   help="shortest speech run kept (default: %(default)s)")


def _add_wsola_options(p):
    g = p.add_argument_group("WSOLA")
    g.add_argument("--wsola-frame-ms", type=float, default=config.WSOLA_FRAME_MS,
                   help="synthesis frame length in ms (default: %(default)s)")
    g.add_argument("--overlap", type=float, default=config.WSOLA_OVERLAP,
                   help="frame overlap fraction (default: %(default)s)")
    g.add_argument("--tolerance-ms", type=float, default=config.WSOLA_TOLERANCE_MS,
                   help="similarity search half-width in ms (default: %(default)s)")
    g.add_argument("--window", default=config.WSOLA_WINDOW, choices=("hann", "hamming", "sine"),
                   help="tapering window (default: %(default)s)")


def _add_method_options(p):
    g = p.add_argument_group("schedule")
    g.add_argument("--method", required=True, choices=METHODS,
                   help="L: uniform; NL1: speech only; NL2: silence solved for --target-total; "
                        "NL3: silence Y times faster than speech")
    rate = g.add_mutually_exclusive_group()
    rate.add_argument("--rate", type=float,
                      help="overall rate (L, NL3), or speech rate for NL1/NL2 when --speech-rate is absent")
    rate.add_argument("--target-duration", type=float, metavar="SECS",
                      help="derive --rate so a uniform compression of this clip lasts SECS")
    g.add_argument("--speech-rate", type=float, help="rate applied to speech (NL1, NL2)")
    g.add_argument("--target-total", type=float, metavar="SECS",
                   help="required output duration (NL2 only)")
    g.add_argument("--y", type=float, default=None,
                   help=f"silence/speech rate ratio (NL3 only; default {config.SILENCE_WEIGHT_Y})")


def _segmenter_config(args):
    try:
        return SegmenterConfig(args.frame_ms, args.hop_ms, args.threshold_db,
                               args.min_silence_ms, args.min_speech_ms)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _wsola_params(args):
    try:
        return WsolaParams(args.wsola_frame_ms, args.overlap, args.tolerance_ms, args.window)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_method_flags(args):
    m = args.method
    has_rate = args.rate is not None or args.target_duration is not None
    if args.y is not None and m != "NL3":
        raise UsageError("--y applies to NL3 only")
    if args.target_total is not None and m != "NL2":
        raise UsageError("--target-total applies to NL2 only")
    if args.speech_rate is not None and m not in ("NL1", "NL2"):
        raise UsageError("--speech-rate applies to NL1 and NL2 only")
    if m in ("L", "NL3") and not has_rate:
        raise UsageError(f"{m} requires --rate or --target-duration")
    if m in ("NL1", "NL2") and args.speech_rate is None and not has_rate:
        raise UsageError(f"{m} requires --speech-rate (or --rate/--target-duration)")
    if m == "NL2" and args.target_total is None:
        raise UsageError("NL2 requires --target-total")
    if m in ("NL1", "NL2") and args.speech_rate is not None and has_rate:
        raise UsageError("give either --speech-rate or --rate/--target-duration, not both")


def _method_spec(args, duration: float) -> MethodSpec:
    rate = args.rate
    if args.target_duration is not None:
        rate = match_duration_rate(duration, args.target_duration)
    m = args.method
    if m == "L":
        return MethodSpec("L", overall_rate=rate)
    speech_rate = rate if args.speech_rate is None else args.speech_rate
    if m == "NL1":
        return MethodSpec("NL1", speech_rate=speech_rate)
    if m == "NL2":
        return MethodSpec("NL2", speech_rate=speech_rate,
                          target_total_seconds=args.target_total)
    y = config.SILENCE_WEIGHT_Y if args.y is None else args.y
    return MethodSpec("NL3", overall_rate=rate, silence_weight_Y=y)


def _dump_json(obj, path=None):
    text = json.dumps(obj, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _pool_map(fn, jobs, workers):
    # Results come back in job order whatever the completion order.
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# -- analyze -----------------------------------------------------------------

def _analyze_job(job):
    path, cfg, transcript, syllables = job
    clip = load_wav(path)
    return clip.sample_rate, analyze_utterance(clip, cfg, transcript, syllables)


def _check_sample_rates(entries):
    rates = {}
    for label, path in entries:
        sr, _ = read_wav_header(path)
        rates.setdefault(sr, label)
    if len(rates) > 1:
        detail = ", ".join(f"{sr} Hz ({label})" for sr, label in rates.items())
        raise InputError(f"mixed sample rates in one corpus: {detail}")


def _ratio_block(corpus, reference):
    block = {}
    if reference not in corpus.styles:
        return block
    ref = corpus[reference].as_utterance()
    entries = {}
    for style, stats in corpus.styles.items():
        if style == reference:
            continue
        try:
            entries[style] = duration_ratios(ref, stats.as_utterance()).rounded(2)
        except ValueError as exc:
            entries[style] = {"error": str(exc)}
    block[reference] = entries
    return block


def run_analyze(args):
    cfg = _segmenter_config(args)
    src = Path(args.input)
    if src.suffix.lower() == ".csv":
        try:
            rows = read_manifest(src)
        except (ManifestError, OSError) as exc:
            raise InputError(str(exc)) from None
        entries = [(r.path.relative_to(src.parent).as_posix() if r.path.is_relative_to(src.parent)
                    else str(r.path), r.style, r) for r in rows]
        _check_sample_rates([(f"line {r.line}", r.path) for r in rows])
        jobs = [(r.path, cfg, r.transcript(), r.syllable_count) for r in rows]
    else:
        entries = [(src.name, args.style, None)]
        jobs = [(src, cfg, None, None)]
    results = _pool_map(_analyze_job, jobs, args.workers)

    utterances = []
    pairs = []
    for (name, style, _), (sr, stats) in zip(entries, results):
        utterances.append({"path": name, "style": style, "sample_rate": sr, **stats.to_dict()})
        pairs.append((style, stats))
    corpus = aggregate_corpus(pairs)
    reference = args.reference or next(iter(corpus.styles))
    report = {
        "utterances": utterances,
        "styles": {style: s.to_dict() for style, s in corpus.styles.items()},
        "reference_style": reference,
        "ratios": _ratio_block(corpus, reference),
    }
    _dump_json(report, args.output)
    if args.figures:
        from .plotting import plot_style_timings

        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        plot_style_timings(corpus, out / "style_timings.png")
    return EXIT_OK


# -- segments ----------------------------------------------------------------

def run_segments(args):
    clip = load_wav(args.input)
    track = detect_segments(clip, _segmenter_config(args))
    if args.output:
        write_segments_csv(track, clip.sample_rate, args.output)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["start_sec", "end_sec", "label"])
        for seg in track.segments:
            writer.writerow([f"{seg.start / clip.sample_rate:.6f}",
                             f"{seg.end / clip.sample_rate:.6f}", seg.label])
        sys.stdout.write(buf.getvalue())
    if args.figures:
        from .plotting import plot_segments

        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        plot_segments(clip, track, out / f"{Path(args.input).stem}_segments.png")
    return EXIT_OK


# -- compress ----------------------------------------------------------------

def _verify(report, spec, class_rates, out_clip, clip):
    problems = []
    if abs(report.output_samples - report.target_output_samples) > report.synthesis_hop:
        problems.append(
            f"output has {report.output_samples} samples, target {report.target_output_samples} "
            f"(tolerance {report.synthesis_hop})"
        )
    if out_clip.sample_rate != clip.sample_rate:
        problems.append("output sample rate differs from input")
    if not report.realized_overall_rate > 0:
        problems.append("non-positive realized rate")
    if spec.method == "NL3" and class_rates.speech and class_rates.silence:
        if not math.isclose(class_rates.silence_to_speech, spec.silence_weight_Y, rel_tol=1e-9):
            problems.append(
                f"silence/speech rate ratio {class_rates.silence_to_speech} != Y={spec.silence_weight_Y}"
            )
    if problems:
        raise ContractViolation("; ".join(problems))


def compress_file(in_path, out_path, args, report_path=None, figures=None):
    """Run segmentation, scheduling and WSOLA for one file; return the report dict."""
    clip = load_wav(in_path)
    seg_cfg = _segmenter_config(args)
    params = _wsola_params(args)
    track = detect_segments(clip, seg_cfg)
    try:
        spec = _method_spec(args, clip.duration)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rate_map = build_map(spec, track, clip.sample_rate)
    out_clip, ts = time_scale(clip, rate_map, params)
    class_rates = summarize_map(rate_map, track)
    _verify(ts, spec, class_rates, out_clip, clip)

    sr = clip.sample_rate
    speech_s, silence_s = class_durations(track, sr)
    report = {
        "input": Path(in_path).name,
        "output": Path(out_path).name,
        "sample_rate": sr,
        "method": {k: v for k, v in asdict(spec).items() if v is not None},
        "segments": {
            "count": len(track.segments),
            "speech": sum(1 for s in track.segments if s.label == "speech"),
            "silence": sum(1 for s in track.segments if s.label == "silence"),
            "speech_seconds": speech_s,
            "silence_seconds": silence_s,
        },
        "class_rates": {
            "speech": class_rates.speech,
            "silence": class_rates.silence,
            "silence_to_speech": class_rates.silence_to_speech,
        },
        "input_seconds": clip.duration,
        "target_output_samples": ts.target_output_samples,
        "target_output_seconds": ts.target_output_samples / sr,
        "output_samples": ts.output_samples,
        "output_seconds": ts.output_samples / sr,
        "synthesis_hop": ts.synthesis_hop,
        "realized_overall_rate": ts.realized_overall_rate,
        "max_local_rate": ts.max_local_rate,
        "warnings": list(ts.warnings),
    }
    save_wav(out_clip, out_path)
    _dump_json(report, report_path or Path(out_path).with_suffix(".json"))
    if getattr(args, "rate_map_csv", None):
        write_rate_map_csv(rate_map, sr, args.rate_map_csv)
    if figures:
        from .plotting import plot_rate_map, plot_segments

        figures = Path(figures)
        figures.mkdir(parents=True, exist_ok=True)
        stem = Path(in_path).stem
        plot_segments(clip, track, figures / f"{stem}_segments.png")
        plot_rate_map(rate_map, sr, figures / f"{stem}_rates.png", track=track,
                      title=f"{spec.method} schedule")
    return report


def run_compress(args):
    _check_method_flags(args)
    report = compress_file(args.input, args.output, args, args.report, args.figures)
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


# -- batch -------------------------------------------------------------------

def _batch_job(job):
    in_path, out_path, args = job
    try:
        return {"status": "ok", **compress_file(in_path, out_path, args)}
    except InfeasibleScheduleError as exc:
        return {"status": "infeasible", "input": Path(in_path).name, "error": str(exc)}
    except (OSError, AudioFormatError, ValueError) as exc:
        return {"status": "input_error", "input": Path(in_path).name, "error": str(exc)}


def run_batch(args):
    _check_method_flags(args)
    _segmenter_config(args)
    _wsola_params(args)
    try:
        rows = read_manifest(args.manifest)
    except (ManifestError, OSError) as exc:
        raise InputError(str(exc)) from None
    _check_sample_rates([(f"line {r.line}", r.path) for r in rows])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stems = [r.path.stem for r in rows]
    dupes = sorted({s for s in stems if stems.count(s) > 1})
    if dupes:
        raise InputError(f"duplicate output names in manifest: {', '.join(dupes)}")
    jobs = [(r.path, out_dir / f"{r.path.stem}.wav", args) for r in rows]
    results = _pool_map(_batch_job, jobs, args.workers)
    for r, res in zip(rows, results):
        res["style"] = r.style
        res["line"] = r.line
    summary = {"method": args.method, "files": results}
    _dump_json(summary, args.summary or out_dir / "summary.json")
    statuses = {res["status"] for res in results}
    if "input_error" in statuses:
        return EXIT_INPUT
    if "infeasible" in statuses:
        return EXIT_INFEASIBLE
    return EXIT_OK


# -- score -------------------------------------------------------------------

def run_score(args):
    try:
        refs = read_references(args.references)
        responses = read_responses(args.responses)
    except OSError as exc:
        raise InputError(str(exc)) from None
    table = load_contractions(args.contractions) if args.contractions else load_contractions()
    try:
        cfg = ScoringConfig(table, args.max_edit_distance, args.min_fuzzy_length)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    scored = []
    for listener, condition, sid, text in responses:
        if sid not in refs:
            raise ScoringInputError(f"unknown sentence id: {sid}")
        try:
            scored.append((listener, condition, score_words(refs[sid], text, cfg)))
        except ValueError:
            raise ScoringInputError(f"reference for sentence {sid} has no words") from None
    if not scored:
        raise ScoringInputError("no responses to score")
    policy = OutlierPolicy(args.outlier_k) if args.drop_outliers else None
    agg = aggregate_listeners(scored, policy)
    report = {
        "responses": len(scored),
        "outlier_policy": None if policy is None else {"k": policy.k},
        "excluded_listeners": list(agg.excluded_listeners),
        "listener_means": agg.listener_means,
        "conditions": [asdict(c) for c in agg.conditions],
    }
    _dump_json(report, args.output)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["condition", "mean_percent", "stdev_percent", "listener_count",
                             "excluded_listeners"])
            excluded = ";".join(agg.excluded_listeners)
            for c in agg.conditions:
                writer.writerow([c.condition, f"{c.mean_percent:.6f}", f"{c.stdev_percent:.6f}",
                                 c.listener_count, excluded])
    for lst in agg.excluded_listeners:
        print(f"excluded outlier listener: {lst} (mean {agg.listener_means[lst]:.2f}%)",
              file=sys.stderr)
    if args.figures:
        from .plotting import plot_condition_errors

        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        plot_condition_errors(agg, out / "condition_errors.png")
    return EXIT_OK


# -- ratios ------------------------------------------------------------------

def _load_style_durations(path):
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        styles = data.get("styles")
        if not isinstance(styles, dict):
            raise InputError(f"{path}: no 'styles' block; expected an analyze report")
        return {s: (float(v["speech_seconds"]), float(v["silence_seconds"])) for s, v in styles.items()}
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"style", "speech_seconds", "silence_seconds"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise InputError(f"{path}: header must contain style,speech_seconds,silence_seconds")
        for lineno, row in enumerate(reader, start=2):
            try:
                out[row["style"]] = (float(row["speech_seconds"]), float(row["silence_seconds"]))
            except (TypeError, ValueError):
                raise InputError(f"{path}:{lineno}: durations must be numbers") from None
    return out


def run_ratios(args):
    styles = _load_style_durations(args.input)
    if not styles:
        raise InputError("no styles found")
    reference = args.reference or next(iter(styles))
    if reference not in styles:
        raise InputError(f"reference style {reference!r} not found; have {', '.join(styles)}")
    ref = UtteranceStats.from_durations(*styles[reference])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["reference", "other", "speech_ratio", "silence_ratio", "total_ratio",
                     "speech_compression", "silence_compression", "total_compression"])

    def fmt(v):
        return "" if v is None else f"{v:.2f}"

    for style, durs in styles.items():
        if style == reference:
            continue
        r = duration_ratios(ref, UtteranceStats.from_durations(*durs))
        comp = r.compression or (None, None, None)
        writer.writerow([reference, style, fmt(r.speech), fmt(r.silence), fmt(r.total),
                         *(fmt(c) for c in comp)])
    if args.output:
        Path(args.output).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="speechsqueeze",
        description="Speech/silence-aware WSOLA time compression and listening-test scoring.",
        epilog="exit status: 0 ok, 1 contract violation, 2 usage, 3 input/format, 4 infeasible schedule",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="speech/silence timing statistics")
    p.add_argument("input", help="WAV file, or CSV manifest 'path,style[,transcript_path][,syllable_count]'")
    p.add_argument("-o", "--output", help="report JSON (default: stdout)")
    p.add_argument("--style", default="unlabeled", help="style label for a single WAV input")
    p.add_argument("--reference", help="reference style for the ratio block (default: first style)")
    p.add_argument("--figures", metavar="DIR", help="write style_timings.png here")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default: 1)")
    _add_segmenter_options(p)
    p.set_defaults(func=run_analyze)

    p = sub.add_parser("segments", help="export speech/silence segments as CSV")
    p.add_argument("input", help="WAV file")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.add_argument("--figures", metavar="DIR", help="write <stem>_segments.png here")
    _add_segmenter_options(p)
    p.set_defaults(func=run_segments)

    p = sub.add_parser("compress", help="time-compress one WAV file")
    p.add_argument("input", help="WAV file")
    p.add_argument("-o", "--output", required=True, help="output WAV (16-bit PCM)")
    p.add_argument("--report", help="report JSON (default: output path with .json suffix)")
    p.add_argument("--rate-map-csv", help="also write the schedule as start_sec,rate CSV")
    p.add_argument("--figures", metavar="DIR", help="write segmentation and schedule plots here")
    _add_method_options(p)
    _add_segmenter_options(p)
    _add_wsola_options(p)
    p.set_defaults(func=run_compress)

    p = sub.add_parser("batch", help="compress every file in a manifest")
    p.add_argument("manifest", help="CSV manifest 'path,style[,transcript_path][,syllable_count]'")
    p.add_argument("--out-dir", required=True, help="directory for <stem>.wav and <stem>.json")
    p.add_argument("--summary", help="summary JSON (default: OUT_DIR/summary.json)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default: 1)")
    _add_method_options(p)
    _add_segmenter_options(p)
    _add_wsola_options(p)
    p.set_defaults(func=run_batch, rate_map_csv=None)

    p = sub.add_parser("score", help="word errors of listener transcriptions")
    p.add_argument("--references", required=True, help="'id<TAB>text' lines")
    p.add_argument("--responses", required=True, help="CSV listener,condition,sentence_id,response_text")
    p.add_argument("-o", "--output", help="report JSON (default: stdout)")
    p.add_argument("--csv", help="also write a per-condition CSV")
    p.add_argument("--figures", metavar="DIR", help="write condition_errors.png here")
    p.add_argument("--drop-outliers", action="store_true",
                   help="exclude listeners above mean + k*stdev of listener means")
    p.add_argument("--outlier-k", type=float, default=config.OUTLIER_K,
                   help="outlier cut in standard deviations (default: %(default)s)")
    p.add_argument("--max-edit-distance", type=int, default=config.MAX_EDIT_DISTANCE,
                   help="misspelling tolerance (default: %(default)s)")
    p.add_argument("--min-fuzzy-length", type=int, default=config.MIN_FUZZY_LENGTH,
                   help="shortest word eligible for misspelling matches (default: %(default)s)")
    p.add_argument("--contractions", help="TSV contraction table replacing the bundled one")
    p.set_defaults(func=run_score)

    p = sub.add_parser("ratios", help="speech/silence duration ratios between styles")
    p.add_argument("input", help="analyze report JSON, or CSV style,speech_seconds,silence_seconds")
    p.add_argument("--reference", help="reference style (default: first style)")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.set_defaults(func=run_ratios)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleScheduleError as exc:
        print(f"infeasible schedule: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (InputError, ManifestError, ScoringInputError, AudioFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
