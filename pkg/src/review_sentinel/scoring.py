"""Sentiment scoring over enriched reviews.

Scores live in [-1, 1] and mean positive-class probability minus
negative-class probability. Two routes produce them: a built-in lexicon
scorer (the dependency-free stand-in for an external model) and import of
precomputed scores from a JSONL file. Batch execution is parallel but
order-preserving: consecutive fixed-size batches fan out to a bounded
thread pool and land in pre-indexed result slots.
"""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .ingest import Diagnostic, EnrichedReview, _iter_lines

_TOKEN_RE = re.compile(r"[a-z0-9']+")

# Small general-purpose review lexicon; weights are signed strengths.
DEFAULT_LEXICON: dict[str, float] = {
    "amazing": 2.0, "awesome": 2.0, "excellent": 2.0, "fantastic": 2.0,
    "perfect": 2.0, "love": 2.0, "loved": 2.0, "loves": 2.0, "best": 2.0,
    "wonderful": 2.0, "incredible": 2.0, "flawless": 2.0, "great": 1.0,
    "good": 1.0, "nice": 1.0, "happy": 1.0, "pleased": 1.0, "satisfied": 1.0,
    "recommend": 1.0, "recommended": 1.0, "works": 1.0, "worked": 1.0,
    "solid": 1.0, "comfortable": 1.0, "soft": 1.0, "smooth": 1.0,
    "gentle": 1.0, "easy": 1.0, "quality": 1.0, "beautiful": 1.0,
    "gorgeous": 1.0, "fresh": 1.0, "durable": 1.0, "sturdy": 1.0,
    "favorite": 1.5, "impressed": 1.5, "delighted": 1.5,
    "fine": 0.5, "okay": 0.25, "ok": 0.25, "decent": 0.5,
    "meh": -0.5, "mediocre": -1.0, "bland": -0.5,
    "bad": -1.0, "poor": -1.0, "cheap": -1.0, "flimsy": -1.0,
    "disappointed": -1.5, "disappointing": -1.5, "broke": -1.5,
    "broken": -1.5, "defective": -2.0, "useless": -2.0, "waste": -2.0,
    "terrible": -2.0, "horrible": -2.0, "awful": -2.0, "worst": -2.0,
    "hate": -2.0, "hated": -2.0, "garbage": -2.0, "junk": -2.0,
    "refund": -1.0, "return": -0.5, "returned": -1.0, "never": -0.5,
    "harsh": -1.0, "scratchy": -1.0, "painful": -1.5, "irritating": -1.5,
    "smell": -0.5, "smelly": -1.0, "stopped": -1.0, "leaked": -1.5,
}


class ScoringError(RuntimeError):
    """Scorer failure; carries the index of the batch that failed."""

    def __init__(self, batch_index: int, message: str):
        super().__init__(f"scoring failed for batch {batch_index}: {message}")
        self.batch_index = batch_index


class ScoreRangeError(ValueError):
    """Imported score outside [-1, 1]; carries the offending line numbers."""

    def __init__(self, line_numbers: list[int]):
        preview = ", ".join(str(n) for n in line_numbers[:20])
        suffix = ", ..." if len(line_numbers) > 20 else ""
        super().__init__(f"scores outside [-1, 1] at lines: {preview}{suffix}")
        self.line_numbers = line_numbers


@dataclass(frozen=True)
class ClassProbabilities:
    p_negative: float
    p_positive: float

    def __post_init__(self):
        if self.p_negative < 0 or self.p_positive < 0:
            raise ValueError("class probabilities must be non-negative")
        if abs(self.p_negative + self.p_positive - 1.0) > 1e-12:
            raise ValueError("class probabilities must sum to 1")


@dataclass(frozen=True)
class ScorerSpec:
    kind: str = "lexicon"
    max_length: int = 512
    batch_size: int = 20
    workers: int = 8
    squash: float = 2.0
    lexicon: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.kind not in ("lexicon", "imported"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.max_length < 1:
            raise ValueError("max_length must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.squash <= 0:
            raise ValueError("squash must be positive")


def truncate_text(text: str, max_length: int) -> str:
    """First max_length characters of the text."""
    if max_length < 1:
        raise ValueError("max_length must be at least 1")
    return text[:max_length]


def sentiment_from_probs(probs: ClassProbabilities) -> float:
    """Positive-minus-negative probability, in [-1, 1]."""
    return probs.p_positive - probs.p_negative


def lexicon_score(text: str, lexicon: Mapping[str, float],
                  squash: float = 2.0) -> float:
    """Squashed sum of lexicon weights over lowercased word tokens.

    tanh(raw / squash) keeps the result in [-1, 1]; unknown tokens weigh
    nothing, so empty or unmatched text scores 0.
    """
    tokens = _TOKEN_RE.findall(text.lower())
    raw = sum(lexicon.get(tok, 0.0) for tok in tokens)
    if raw == 0.0:
        return 0.0
    return math.tanh(raw / squash)


BatchScorer = Callable[[Sequence[str]], Sequence[float]]


def build_scorer(spec: ScorerSpec) -> BatchScorer:
    """Materialize the batch scorer for a spec; 'imported' has none."""
    if spec.kind == "imported":
        raise ValueError("imported scorer has no batch function; use import_scores")
    lex = dict(spec.lexicon) if spec.lexicon is not None else DEFAULT_LEXICON

    def score_batch(texts: Sequence[str]) -> list[float]:
        return [lexicon_score(t, lex, spec.squash) for t in texts]

    return score_batch


def score_corpus(rows: Sequence[EnrichedReview], spec: ScorerSpec,
                 batch_scorer: BatchScorer | None = None) -> list[EnrichedReview]:
    """Score every row, preserving input order.

    Rows are cut into consecutive batches of spec.batch_size (last batch
    may be short), each text truncated to spec.max_length, and the batches
    run on at most spec.workers threads. Results are reassembled by batch
    index so output order always equals input order; any batch failure
    aborts the whole run.
    """
    if batch_scorer is None:
        batch_scorer = build_scorer(spec)
    rows = list(rows)
    if not rows:
        return []
    texts = [truncate_text(r.text, spec.max_length) for r in rows]
    batches = [texts[i:i + spec.batch_size] for i in range(0, len(texts), spec.batch_size)]

    slots: list[Sequence[float] | None] = [None] * len(batches)
    with ThreadPoolExecutor(max_workers=spec.workers) as executor:
        futures = [executor.submit(batch_scorer, batch) for batch in batches]
        for i, future in enumerate(futures):
            try:
                result = list(future.result())
            except Exception as exc:
                raise ScoringError(i, str(exc)) from exc
            if len(result) != len(batches[i]):
                raise ScoringError(i, f"scorer returned {len(result)} scores for "
                                      f"{len(batches[i])} texts")
            bad = [s for s in result if not -1.0 <= s <= 1.0]
            if bad:
                raise ScoringError(i, f"score {bad[0]} outside [-1, 1]")
            slots[i] = result

    scores = [s for slot in slots for s in slot]  # type: ignore[union-attr]
    return [row.with_score(score) for row, score in zip(rows, scores)]


@dataclass
class ImportReport:
    matched: int = 0
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_file_rows: int = 0
    duplicate_file_rows: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)


def import_scores(rows: Sequence[EnrichedReview], scored_stream,
                  key: str = "sentiment_score") -> tuple[list[EnrichedReview], ImportReport]:
    """Attach precomputed scores from a JSONL file to corpus rows.

    File rows align with corpus rows on (user_id, parent_asin, timestamp);
    the score is read from the named field. Corpus rows without a match
    keep sentiment_score unset and are listed in the report. Any score
    outside [-1, 1] fails the whole import.
    """
    report = ImportReport()
    table: dict[tuple[str, str, int], float] = {}
    bad_lines: list[int] = []
    for line_no, line in _iter_lines(scored_stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            report.diagnostics.append(Diagnostic(line_no, f"malformed JSON at line {line_no}"))
            continue
        if not isinstance(obj, dict) or key not in obj or obj[key] is None:
            report.diagnostics.append(Diagnostic(line_no, f"line {line_no}: missing field {key!r}"))
            continue
        try:
            score = float(obj[key])
            triple = (str(obj.get("user_id") or ""), str(obj["parent_asin"]),
                      int(obj["timestamp"]))
        except (KeyError, TypeError, ValueError) as exc:
            report.diagnostics.append(Diagnostic(line_no, f"line {line_no}: {exc}"))
            continue
        if not -1.0 <= score <= 1.0:
            bad_lines.append(line_no)
            continue
        if triple in table:
            report.duplicate_file_rows += 1
            continue
        table[triple] = score
    if bad_lines:
        raise ScoreRangeError(bad_lines)

    merged: list[EnrichedReview] = []
    seen: set[tuple[str, str, int]] = set()
    for i, row in enumerate(rows):
        triple = (row.user_id, row.parent_asin, row.timestamp)
        if triple in table:
            merged.append(row.with_score(table[triple]))
            report.matched += 1
            seen.add(triple)
        else:
            merged.append(row)
            report.unmatched_rows.append(i)
    report.unmatched_file_rows = len(table) - len(seen)
    return merged, report


def write_scored(rows: Iterable[EnrichedReview], sink) -> int:
    """Alias for the enriched JSONL writer; scored rows carry every field."""
    from .ingest import write_enriched

    return write_enriched(rows, sink)
