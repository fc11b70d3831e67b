"""Placement-irrespective word-error scoring for listening tests.

A reference word is correct when it appears anywhere in the listener's typed
response. Words are matched as a bag after normalization: exact matches
first, then misspellings within a small edit distance. Extra words in the
response are not penalized.
"""

from __future__ import annotations

import csv
import math
import re
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import config

__all__ = [
    "ScoringConfig",
    "WordErrorResult",
    "OutlierPolicy",
    "ConditionSummary",
    "ListenerAggregate",
    "load_contractions",
    "normalize_token",
    "normalize_text",
    "edit_distance",
    "score_words",
    "aggregate_listeners",
    "read_references",
    "read_responses",
    "ScoringInputError",
]

_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'"})
_NOT_WORD = re.compile(r"[^\w']+")


def load_contractions(path=None) -> dict:
    """Read a ``contraction<TAB>expansion`` table; defaults to the bundled one."""
    if path is None:
        text = resources.files("speechsqueeze").joinpath("data/contractions.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    table = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, expansion = line.partition("\t")
        if not expansion.strip():
            raise ValueError(f"contraction {key!r} has no expansion")
        table[key.strip().lower()] = tuple(expansion.lower().split())
    return table


@dataclass(frozen=True)
class ScoringConfig:
    contraction_table: dict = field(default_factory=load_contractions)
    misspelling_max_edit_distance: int = config.MAX_EDIT_DISTANCE
    misspelling_min_word_length: int = config.MIN_FUZZY_LENGTH

    def __post_init__(self):
        if self.misspelling_max_edit_distance < 0:
            raise ValueError("misspelling_max_edit_distance must be >= 0")
        if self.misspelling_min_word_length < 1:
            raise ValueError("misspelling_min_word_length must be >= 1")


_DEFAULT_CONFIG = None


def _default_config():
    global _DEFAULT_CONFIG
    if _DEFAULT_CONFIG is None:
        _DEFAULT_CONFIG = ScoringConfig()
    return _DEFAULT_CONFIG


def normalize_token(token: str, cfg: ScoringConfig | None = None) -> tuple:
    """Lowercase, strip punctuation and expand contractions.

    >>> normalize_token("Don't")
    ('do', 'not')
    """
    cfg = cfg or _default_config()
    word = token.translate(_APOSTROPHES).lower()
    word = _NOT_WORD.sub("", word).strip("'").replace("_", "")
    if not word:
        return ()
    if word in cfg.contraction_table:
        return cfg.contraction_table[word]
    return (word,)


def normalize_text(text: str, cfg: ScoringConfig | None = None) -> list:
    words = []
    for token in text.split():
        words.extend(normalize_token(token, cfg))
    return words


def edit_distance(a: str, b: str) -> int:
    """Optimal-string-alignment distance: insert, delete, substitute, adjacent swap."""
    if a == b:
        return 0
    prev2 = None
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                cur[j] = min(cur[j], prev2[j - 2] + 1)
        prev2, prev = prev, cur
    return prev[len(b)]


def _fuzzy_matching(ref, hyp, matched, used, max_d, min_len) -> dict:
    # Maximum-cardinality matching between leftover reference and response
    # words (augmenting paths), so the count does not depend on word order.
    # Each reference word tries its candidates nearest-first.
    candidates = {}
    for i, w in enumerate(ref):
        if matched[i] is not None or len(w) < min_len:
            continue
        options = []
        for j, cand in enumerate(hyp):
            if used[j] or len(cand) < min_len or abs(len(cand) - len(w)) > max_d:
                continue
            d = edit_distance(w, cand)
            if d <= max_d:
                options.append((d, j))
        if options:
            candidates[i] = [j for _, j in sorted(options)]

    owner = {}  # response index -> reference index

    def augment(i, seen):
        for j in candidates[i]:
            if j in seen:
                continue
            seen.add(j)
            if j not in owner or augment(owner[j], seen):
                owner[j] = i
                return True
        return False

    for i in candidates:
        augment(i, set())
    return {i: j for j, i in owner.items()}


@dataclass(frozen=True)
class WordErrorResult:
    reference_word_count: int
    error_count: int
    matched_pairs: tuple = ()

    @property
    def error_percent(self) -> float:
        return 100.0 * self.error_count / self.reference_word_count


def score_words(reference: str, response: str, cfg: ScoringConfig | None = None) -> WordErrorResult:
    """Count reference words missing from ``response``, ignoring word order.

    Parameters
    ----------
    reference, response : str
        Raw text; both are normalized with :func:`normalize_text`.
    cfg : ScoringConfig, optional

    Returns
    -------
    WordErrorResult

    Raises
    ------
    ValueError
        If the reference has no words after normalization.
    """
    cfg = cfg or _default_config()
    ref = normalize_text(reference, cfg)
    if not ref:
        raise ValueError("reference has no words")
    hyp = normalize_text(response, cfg)

    available = list(hyp)
    used = [False] * len(available)
    matched = [None] * len(ref)

    positions = defaultdict(list)
    for j, w in enumerate(available):
        positions[w].append(j)
    for i, w in enumerate(ref):
        if positions[w]:
            j = positions[w].pop(0)
            used[j] = True
            matched[i] = (w, available[j])

    max_d = cfg.misspelling_max_edit_distance
    min_len = cfg.misspelling_min_word_length
    if max_d > 0:
        for i, j in _fuzzy_matching(ref, available, matched, used, max_d, min_len).items():
            matched[i] = (ref[i], available[j])

    pairs = tuple(p for p in matched if p is not None)
    return WordErrorResult(len(ref), len(ref) - len(pairs), pairs)


@dataclass(frozen=True)
class OutlierPolicy:
    """Drop listeners whose overall mean error exceeds ``mean + k * stdev``.

    Mean and (sample) standard deviation are taken over the listeners'
    overall means, in a single pass.
    """

    k: float = config.OUTLIER_K


@dataclass(frozen=True)
class ConditionSummary:
    condition: str
    mean_percent: float
    stdev_percent: float
    listener_count: int


@dataclass(frozen=True)
class ListenerAggregate:
    conditions: tuple  # ConditionSummary, sorted by condition id
    excluded_listeners: tuple = ()
    listener_means: dict = field(default_factory=dict)

    def __getitem__(self, condition) -> ConditionSummary:
        for c in self.conditions:
            if c.condition == condition:
                return c
        raise KeyError(condition)


def _stdev(values):
    return statistics.stdev(values) if len(values) > 1 else 0.0


def aggregate_listeners(per_response, outlier_policy: OutlierPolicy | None = None) -> ListenerAggregate:
    """Average error percentages per listener, then across listeners.

    Parameters
    ----------
    per_response : iterable of (listener, condition, WordErrorResult)
    outlier_policy : OutlierPolicy, optional
        When given, flagged listeners are removed and listed in the result.

    Returns
    -------
    ListenerAggregate
        Per condition: the mean and sample standard deviation of the
        per-listener mean error percent.
    """
    cells = defaultdict(list)
    for listener, condition, result in per_response:
        cells[(str(listener), str(condition))].append(result.error_percent)
    if not cells:
        raise ValueError("no responses to aggregate")

    per_listener = defaultdict(dict)
    for (listener, condition), values in cells.items():
        per_listener[listener][condition] = math.fsum(values) / len(values)
    listener_means = {
        lst: math.fsum(conds.values()) / len(conds) for lst, conds in sorted(per_listener.items())
    }

    excluded = ()
    if outlier_policy is not None and len(listener_means) > 1:
        values = list(listener_means.values())
        cut = statistics.fmean(values) + outlier_policy.k * _stdev(values)
        excluded = tuple(lst for lst, m in listener_means.items() if m > cut)

    by_condition = defaultdict(list)
    for listener in sorted(per_listener):
        if listener in excluded:
            continue
        for condition, value in per_listener[listener].items():
            by_condition[condition].append(value)
    summaries = tuple(
        ConditionSummary(cond, statistics.fmean(vals), _stdev(vals), len(vals))
        for cond, vals in sorted(by_condition.items())
    )
    return ListenerAggregate(summaries, excluded, listener_means)


class ScoringInputError(ValueError):
    """Reference or response files are malformed or inconsistent."""


def read_references(path) -> dict:
    """Parse ``id<TAB>text`` lines into an ordered ``{id: text}`` mapping."""
    refs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n\r")
            if not line.strip():
                continue
            sid, sep, text = line.partition("\t")
            sid = sid.strip()
            if not sep or not sid:
                raise ScoringInputError(f"{path}:{lineno}: expected 'id<TAB>text'")
            if not text.strip():
                raise ScoringInputError(f"{path}:{lineno}: empty reference for sentence {sid!r}")
            if sid in refs:
                raise ScoringInputError(f"{path}:{lineno}: duplicate sentence id {sid!r}")
            refs[sid] = text
    return refs


def read_responses(path) -> list:
    """Parse the ``listener,condition,sentence_id,response_text`` CSV."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"listener", "condition", "sentence_id", "response_text"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ScoringInputError(f"{path}: header must contain {', '.join(sorted(need))}")
        for lineno, row in enumerate(reader, start=2):
            if not row["listener"] or not row["condition"] or not row["sentence_id"]:
                raise ScoringInputError(f"{path}:{lineno}: listener, condition and sentence_id are required")
            rows.append(
                (row["listener"], row["condition"], row["sentence_id"], row["response_text"] or "")
            )
    return rows
