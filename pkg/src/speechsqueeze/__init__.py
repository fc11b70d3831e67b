"""Speech/silence-aware time compression of speech with variable-rate WSOLA."""

from .audio_io import AudioClip, load_wav, save_wav
from .corpus_stats import (
    CorpusStats,
    UtteranceStats,
    aggregate_corpus,
    analyze_utterance,
    duration_ratios,
)
from .errors import AudioFormatError, ContractViolation, InfeasibleScheduleError
from .rate_scheduler import (
    MethodSpec,
    RateMap,
    build_linear_map,
    build_map,
    build_nl1_map,
    build_nl2_map,
    build_nl3_map,
    match_duration_rate,
    summarize_map,
)
from .segmenter import Segment, SegmenterConfig, SegmentTrack, class_durations, detect_segments
from .wer_scorer import ScoringConfig, WordErrorResult, aggregate_listeners, normalize_token, score_words
from .wsola import TimeScaleReport, WsolaParams, best_offset, time_scale

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "load_wav", "save_wav",
    "CorpusStats", "UtteranceStats", "aggregate_corpus", "analyze_utterance", "duration_ratios",
    "AudioFormatError", "ContractViolation", "InfeasibleScheduleError",
    "MethodSpec", "RateMap", "build_linear_map", "build_map", "build_nl1_map", "build_nl2_map",
    "build_nl3_map", "match_duration_rate", "summarize_map",
    "Segment", "SegmenterConfig", "SegmentTrack", "class_durations", "detect_segments",
    "ScoringConfig", "WordErrorResult", "aggregate_listeners", "normalize_token", "score_words",
    "TimeScaleReport", "WsolaParams", "best_offset", "time_scale",
]
