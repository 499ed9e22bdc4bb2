"""JSON-Lines ingestion: parse review and item-metadata corpora, join them
on parent_asin, engineer per-review features, and filter to heavily
reviewed products.

Parsing is streaming and line-oriented. Lenient mode skips bad lines and
records a diagnostic per skip; strict mode raises on the first bad line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable, Iterator

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

# Metadata fields carried through the join untouched. The review side also
# has "images" and "title", so colliding meta fields get a meta_ prefix in
# serialized output.
_META_PASSTHROUGH = ("features", "description", "images", "videos",
                     "categories", "details", "bought_together")


class ParseError(ValueError):
    """Malformed input line in strict mode."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Diagnostic:
    line_no: int | None
    message: str


@dataclass(frozen=True)
class ReviewRecord:
    rating: float
    title: str
    text: str
    images: tuple
    parent_asin: str
    user_id: str
    timestamp: int
    verified_purchase: bool
    helpful_vote: int


@dataclass(frozen=True)
class ItemMeta:
    parent_asin: str
    main_category: str = ""
    title: str = ""
    average_rating: float | None = None
    rating_number: int | None = None
    price: float | None = None
    store: str = ""
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class JoinedRow:
    review: ReviewRecord
    meta: ItemMeta


@dataclass(frozen=True)
class EnrichedReview:
    # review side
    rating: float
    title: str
    text: str
    images: tuple
    parent_asin: str
    user_id: str
    timestamp: int
    helpful_vote: int
    # engineered
    review_length: int
    has_images: int
    verified_purchase_flag: int
    year: int
    month: int
    day: int
    weekday: int
    sentiment_score: float | None
    # metadata side
    main_category: str
    meta_title: str
    average_rating: float | None
    rating_number: int | None
    price: float | None
    store: str
    meta_extras: dict = field(default_factory=dict)

    def with_score(self, score: float | None) -> "EnrichedReview":
        if score is not None and not -1.0 <= score <= 1.0:
            raise ValueError(f"sentiment score {score} outside [-1, 1]")
        return replace(self, sentiment_score=score)


def _iter_lines(stream) -> Iterator[tuple[int, str]]:
    """Yield (1-based line number, decoded stripped line), skipping blanks."""
    if isinstance(stream, (str, bytes)):
        raise TypeError("pass an open file or an iterable of lines, not a path")
    for i, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.strip()
        if line:
            yield i, line


def _parse_jsonl(stream, strict: bool, builder, diagnostics: list[Diagnostic]):
    out = []
    for line_no, line in _iter_lines(stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            msg = f"malformed JSON at line {line_no}"
            if strict:
                raise ParseError(line_no, "malformed JSON")
            diagnostics.append(Diagnostic(line_no, msg))
            continue
        if not isinstance(obj, dict):
            msg = f"line {line_no} is not a JSON object"
            if strict:
                raise ParseError(line_no, "not a JSON object")
            diagnostics.append(Diagnostic(line_no, msg))
            continue
        try:
            out.append(builder(obj))
        except (KeyError, TypeError, ValueError) as exc:
            if strict:
                raise ParseError(line_no, str(exc)) from exc
            diagnostics.append(Diagnostic(line_no, f"line {line_no}: {exc}"))
    return out


def _require_str(obj: dict, key: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise ValueError(f"missing or empty '{key}'")
    return value


def _optional_number(obj: dict, key: str) -> float | None:
    value = obj.get(key)
    if value is None:
        return None
    if isinstance(value, bool):
        raise ValueError(f"'{key}' must be numeric")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ValueError(f"'{key}' is not numeric: {value!r}") from None
    raise ValueError(f"'{key}' must be numeric")


def _build_review(obj: dict) -> ReviewRecord:
    rating = _optional_number(obj, "rating")
    if rating is None:
        raise ValueError("missing 'rating'")
    if not 1.0 <= rating <= 5.0:
        raise ValueError(f"rating {rating} outside [1, 5]")
    parent_asin = _require_str(obj, "parent_asin")
    ts = obj.get("timestamp")
    if isinstance(ts, bool) or not isinstance(ts, (int, float)):
        raise ValueError("missing or non-numeric 'timestamp'")
    ts = int(ts)
    if ts < 0:
        raise ValueError(f"timestamp {ts} is negative")
    images = obj.get("images") or []
    if not isinstance(images, list):
        raise ValueError("'images' must be a list")
    helpful = obj.get("helpful_vote")
    helpful = 0 if helpful is None else int(helpful)
    if helpful < 0:
        raise ValueError(f"helpful_vote {helpful} is negative")
    return ReviewRecord(
        rating=rating,
        title=str(obj.get("title") or ""),
        text=str(obj.get("text") or ""),
        images=tuple(images),
        parent_asin=parent_asin,
        user_id=str(obj.get("user_id") or ""),
        timestamp=ts,
        verified_purchase=bool(obj.get("verified_purchase", False)),
        helpful_vote=helpful,
    )


def _build_meta(obj: dict) -> ItemMeta:
    parent_asin = _require_str(obj, "parent_asin")
    price = _optional_number(obj, "price")
    if price is not None and price < 0:
        raise ValueError(f"price {price} is negative")
    rating_number = obj.get("rating_number")
    if rating_number is not None:
        rating_number = int(rating_number)
        if rating_number < 0:
            raise ValueError(f"rating_number {rating_number} is negative")
    extras = {k: obj[k] for k in _META_PASSTHROUGH if k in obj}
    return ItemMeta(
        parent_asin=parent_asin,
        main_category=str(obj.get("main_category") or ""),
        title=str(obj.get("title") or ""),
        average_rating=_optional_number(obj, "average_rating"),
        rating_number=rating_number,
        price=price,
        store=str(obj.get("store") or ""),
        extras=extras,
    )


def parse_reviews(stream, strict: bool = False) -> tuple[list[ReviewRecord], list[Diagnostic]]:
    """Parse a review JSONL stream.

    Missing helpful_vote becomes 0 and missing images becomes the empty
    list. Records come back in input order.
    """
    diagnostics: list[Diagnostic] = []
    records = _parse_jsonl(stream, strict, _build_review, diagnostics)
    return records, diagnostics


def parse_metadata(stream, strict: bool = False) -> tuple[list[ItemMeta], list[Diagnostic]]:
    """Parse an item-metadata JSONL stream; absent price stays missing, never 0."""
    diagnostics: list[Diagnostic] = []
    records = _parse_jsonl(stream, strict, _build_meta, diagnostics)
    return records, diagnostics


def merge_on_parent_asin(reviews: Iterable[ReviewRecord],
                         meta: Iterable[ItemMeta]) -> tuple[list[JoinedRow], list[Diagnostic]]:
    """Inner join reviews with metadata on parent_asin.

    Metadata is deduplicated first (first occurrence per parent_asin wins),
    so each review matches at most one meta row. Reviews without metadata
    are dropped; output keeps review input order.
    """
    by_asin: dict[str, ItemMeta] = {}
    for m in meta:
        by_asin.setdefault(m.parent_asin, m)
    joined = [JoinedRow(r, by_asin[r.parent_asin]) for r in reviews if r.parent_asin in by_asin]
    diagnostics: list[Diagnostic] = []
    if not joined:
        diagnostics.append(Diagnostic(None, "empty join: no review matched any metadata row"))
    return joined, diagnostics


def engineer_features(row: JoinedRow) -> EnrichedReview:
    """Derive the per-review feature block from one joined row.

    review_length counts Unicode characters of the text; calendar fields
    come from the millisecond timestamp interpreted in UTC, weekday with
    Monday = 0.
    """
    r, m = row.review, row.meta
    moment = _EPOCH + timedelta(milliseconds=r.timestamp)
    return EnrichedReview(
        rating=r.rating,
        title=r.title,
        text=r.text,
        images=r.images,
        parent_asin=r.parent_asin,
        user_id=r.user_id,
        timestamp=r.timestamp,
        helpful_vote=r.helpful_vote,
        review_length=len(r.text),
        has_images=1 if r.images else 0,
        verified_purchase_flag=1 if r.verified_purchase else 0,
        year=moment.year,
        month=moment.month,
        day=moment.day,
        weekday=moment.weekday(),
        sentiment_score=None,
        main_category=m.main_category,
        meta_title=m.title,
        average_rating=m.average_rating,
        rating_number=m.rating_number,
        price=m.price,
        store=m.store,
        meta_extras=dict(m.extras),
    )


def filter_products(rows: Iterable[EnrichedReview], min_reviews: int,
                    require_price: bool = True) -> list[EnrichedReview]:
    """Keep only products with at least min_reviews surviving reviews.

    With require_price, rows lacking a price neither count toward the
    product total nor appear in the output. Input order is preserved.
    """
    if min_reviews < 1:
        raise ValueError("min_reviews must be at least 1")
    rows = list(rows)
    surviving = [r for r in rows if not (require_price and r.price is None)]
    counts: dict[str, int] = {}
    for r in surviving:
        counts[r.parent_asin] = counts.get(r.parent_asin, 0) + 1
    keep = {asin for asin, n in counts.items() if n >= min_reviews}
    return [r for r in surviving if r.parent_asin in keep]


# --- enriched-row serialization -----------------------------------------

def enriched_to_dict(row: EnrichedReview) -> dict:
    """Flatten an enriched review to the JSONL field layout.

    Engineered columns keep the names used across the analysis stages
    (review_length, has_images, year, month, day, weekday); the
    verified-purchase flag is emitted as 0/1 under its original name.
    Metadata fields that collide with review fields get a meta_ prefix.
    """
    d = {
        "rating": row.rating,
        "title": row.title,
        "text": row.text,
        "images": list(row.images),
        "parent_asin": row.parent_asin,
        "user_id": row.user_id,
        "timestamp": row.timestamp,
        "verified_purchase": row.verified_purchase_flag,
        "helpful_vote": row.helpful_vote,
        "review_length": row.review_length,
        "has_images": row.has_images,
        "year": row.year,
        "month": row.month,
        "day": row.day,
        "weekday": row.weekday,
        "sentiment_score": row.sentiment_score,
        "main_category": row.main_category,
        "meta_title": row.meta_title,
        "average_rating": row.average_rating,
        "rating_number": row.rating_number,
        "price": row.price,
        "store": row.store,
    }
    for key, value in row.meta_extras.items():
        d["meta_images" if key == "images" else key] = value
    return d


def enriched_from_dict(d: dict) -> EnrichedReview:
    score = d.get("sentiment_score")
    if score is not None:
        score = float(score)
        if not -1.0 <= score <= 1.0:
            raise ValueError(f"sentiment score {score} outside [-1, 1]")
    extras = {}
    for key in _META_PASSTHROUGH:
        stored = "meta_images" if key == "images" else key
        if stored in d:
            extras[key] = d[stored]
    avg = d.get("average_rating")
    rn = d.get("rating_number")
    price = d.get("price")
    return EnrichedReview(
        rating=float(d["rating"]),
        title=str(d.get("title") or ""),
        text=str(d.get("text") or ""),
        images=tuple(d.get("images") or ()),
        parent_asin=str(d["parent_asin"]),
        user_id=str(d.get("user_id") or ""),
        timestamp=int(d["timestamp"]),
        helpful_vote=int(d.get("helpful_vote") or 0),
        review_length=int(d["review_length"]),
        has_images=int(d["has_images"]),
        verified_purchase_flag=int(d.get("verified_purchase") or 0),
        year=int(d["year"]),
        month=int(d["month"]),
        day=int(d["day"]),
        weekday=int(d["weekday"]),
        sentiment_score=score,
        main_category=str(d.get("main_category") or ""),
        meta_title=str(d.get("meta_title") or ""),
        average_rating=None if avg is None else float(avg),
        rating_number=None if rn is None else int(rn),
        price=None if price is None else float(price),
        store=str(d.get("store") or ""),
        meta_extras=extras,
    )


def write_enriched(rows: Iterable[EnrichedReview], sink: IO[str]) -> int:
    """Write enriched rows as JSON Lines; returns the row count."""
    n = 0
    for row in rows:
        sink.write(json.dumps(enriched_to_dict(row), ensure_ascii=False))
        sink.write("\n")
        n += 1
    return n


def load_enriched(stream, strict: bool = False) -> tuple[list[EnrichedReview], list[Diagnostic]]:
    """Read enriched rows back from JSON Lines."""
    diagnostics: list[Diagnostic] = []
    rows = _parse_jsonl(stream, strict, enriched_from_dict, diagnostics)
    return rows, diagnostics
