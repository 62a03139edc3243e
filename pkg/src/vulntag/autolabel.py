"""Automatic IOB annotation of descriptions from three rule families:
exact matches against the linked structured record, heuristic rules for
versions and code symbols, and a relevant-terms gazetteer.

Overlaps are resolved by a total order: record matches beat heuristics beat
gazetteer hits, then longer spans, then earlier start positions.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import (
    AnnotatedDescription,
    AnnotatedToken,
    Corpus,
    EntityLabel,
    IOBTag,
    Token,
    build_description,
    file_extension_of,
    tokenize,
)
from .errors import InvalidParameterError, RecordFormatError
from .features import DEFAULT_CONFIG, FeatureConfig, pos_tag, word_shape
from .ioutil import atomic_write_text

logger = logging.getLogger(__name__)

#: Lower value wins during overlap resolution.
SOURCE_PRIORITY = {"record-match": 0, "heuristic": 1, "gazetteer": 2}

#: Words allowed between a product/version anchor and a version token.
VERSION_TRIGGER_WORDS = frozenset({"before", "after", "through", "prior", "to", "and", "earlier"})

#: Digits and dots with an optional trailing ``.x`` or single letter.
_VERSION_RX = re.compile(r"^\d+(?:\.\d+)*(?:\.[xX]|[A-Za-z])?$")


@dataclass(frozen=True, slots=True)
class StructuredRecord:
    """One vulnerability-style database record used as the labeling source."""

    id: str
    vendors: tuple[str, ...] = ()
    products: tuple[str, ...] = ()
    versions: tuple[str, ...] = ()
    languages: tuple[str, ...] = ()
    cwe_id: str = ""
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "vendors", tuple(self.vendors))
        object.__setattr__(self, "products", tuple(self.products))
        object.__setattr__(self, "versions", tuple(self.versions))
        object.__setattr__(self, "languages", tuple(self.languages))
        if not self.id:
            raise ValueError("record id must be non-empty")
        for field_name in ("vendors", "products", "versions", "languages"):
            if any(not value for value in getattr(self, field_name)):
                raise ValueError(f"record {self.id}: empty string in {field_name}")


@dataclass(frozen=True, slots=True)
class MatchSpan:
    """A candidate entity span over token indices, end exclusive."""

    start: int
    end: int
    label: EntityLabel
    source: str
    priority: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"span must satisfy 0 <= start < end, got [{self.start}, {self.end})")
        if self.source not in SOURCE_PRIORITY:
            raise ValueError(f"unknown span source: {self.source!r}")


def _span(start: int, end: int, label: EntityLabel, source: str) -> MatchSpan:
    return MatchSpan(start, end, label, source, SOURCE_PRIORITY[source])


@dataclass(frozen=True, slots=True)
class Gazetteer:
    """Phrase list mapping token n-grams to the relevant-term label."""

    entries: frozenset[tuple[str, ...]]
    max_n: int = 3
    stoplist: frozenset[tuple[str, ...]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", frozenset(tuple(e) for e in self.entries))
        object.__setattr__(self, "stoplist", frozenset(tuple(e) for e in self.stoplist))
        if not 1 <= self.max_n <= 3:
            raise InvalidParameterError(f"max_n must be between 1 and 3, got {self.max_n}")
        for entry in self.entries:
            if not 1 <= len(entry) <= self.max_n:
                raise ValueError(f"entry length out of range: {entry!r}")
            if entry in self.stoplist:
                raise ValueError(f"entry also appears in the stoplist: {entry!r}")


EMPTY_GAZETTEER = Gazetteer(frozenset())

# Field name -> (label, case_sensitive). Ids and version strings match
# exactly; vendor/product/language names match case-insensitively.
_RECORD_FIELDS = (
    ("vendors", EntityLabel.SOFTWARE_VENDOR, False),
    ("products", EntityLabel.SOFTWARE_PRODUCT, False),
    ("versions", EntityLabel.SOFTWARE_VERSION, True),
    ("languages", EntityLabel.SOFTWARE_LANGUAGE, False),
)


def match_record(tokens: Sequence[Token], record: StructuredRecord) -> list[MatchSpan]:
    """Spans for every token subsequence equal to a record field value.

    Field values are tokenized with the same tokenizer, so a value matches
    exactly when the token texts line up.
    """
    spans: list[MatchSpan] = []
    texts = [tok.text for tok in tokens]
    folded = [t.lower() for t in texts]

    def scan(value: str, label: EntityLabel, case_sensitive: bool) -> None:
        needle = [tok.text for tok in tokenize(value)]
        if not needle:
            return
        haystack = texts if case_sensitive else folded
        if not case_sensitive:
            needle = [t.lower() for t in needle]
        size = len(needle)
        for start in range(len(haystack) - size + 1):
            if haystack[start : start + size] == needle:
                spans.append(_span(start, start + size, label, "record-match"))

    for field_name, label, case_sensitive in _RECORD_FIELDS:
        for value in getattr(record, field_name):
            scan(value, label, case_sensitive)
    scan(record.id, EntityLabel.VULNERABILITY_NAME, True)
    return spans


def is_version_shaped(text: str) -> bool:
    return _VERSION_RX.match(text) is not None


def is_symbol_shaped(text: str, extensions: Iterable[str] = DEFAULT_CONFIG.file_extensions) -> bool:
    """Camel-case, snake-case, or a file name ending in a known extension."""
    shape = word_shape(text)
    if shape.camel_case or shape.snake_case:
        return True
    ext = file_extension_of(text)
    return ext is not None and ext in set(extensions)


def _is_transparent(text: str) -> bool:
    # Trigger words and bare punctuation may sit between an anchor and a
    # version token without breaking the window.
    return text.lower() in VERSION_TRIGGER_WORDS or all(not ch.isalnum() for ch in text)


def apply_heuristics(
    tokens: Sequence[Token],
    existing: Sequence[MatchSpan],
    extensions: Iterable[str] = DEFAULT_CONFIG.file_extensions,
) -> list[MatchSpan]:
    """Heuristic spans for version phrases and code symbols.

    A version-shaped token is labeled when it falls within the three token
    positions after a product or version span and everything between is a
    trigger word or punctuation. Newly accepted version tokens extend the
    anchoring, so ranges like ``1.1.4 through 2.3.0`` chain.
    """
    spans: list[MatchSpan] = []
    anchor_ends: list[int] = [
        s.end
        for s in existing
        if s.label in (EntityLabel.SOFTWARE_PRODUCT, EntityLabel.SOFTWARE_VERSION)
    ]
    ext_set = set(extensions)
    for i, tok in enumerate(tokens):
        if is_version_shaped(tok.text):
            anchored = any(
                e <= i <= e + 2 and all(_is_transparent(tokens[j].text) for j in range(e, i))
                for e in anchor_ends
            )
            if anchored:
                spans.append(_span(i, i + 1, EntityLabel.SOFTWARE_VERSION, "heuristic"))
                anchor_ends.append(i + 1)
        if is_symbol_shaped(tok.text, ext_set):
            spans.append(_span(i, i + 1, EntityLabel.SOFTWARE_SYMBOL, "heuristic"))
    return spans


def build_gazetteer(
    records: Sequence[StructuredRecord],
    min_count: int = 20,
    max_n: int = 3,
    stoplist: Iterable[tuple[str, ...]] = frozenset(),
) -> Gazetteer:
    """Frequent lowercased n-grams per weakness class, minus the stoplist.

    Descriptions are grouped by ``cwe_id``; an n-gram survives when its
    count reaches ``min_count`` within at least one group. The result is
    the union over groups.
    """
    if min_count < 1:
        raise InvalidParameterError(f"min_count must be >= 1, got {min_count}")
    if not 1 <= max_n <= 3:
        raise InvalidParameterError(f"max_n must be between 1 and 3, got {max_n}")
    stop = frozenset(tuple(e) for e in stoplist)
    group_counts: dict[str, Counter] = {}
    for record in records:
        if not record.description.strip():
            continue
        words = [tok.text.lower() for tok in tokenize(record.description)]
        counts = group_counts.setdefault(record.cwe_id, Counter())
        for n in range(1, max_n + 1):
            for start in range(len(words) - n + 1):
                counts[tuple(words[start : start + n])] += 1
    entries = {
        gram
        for counts in group_counts.values()
        for gram, count in counts.items()
        if count >= min_count and gram not in stop
    }
    return Gazetteer(frozenset(entries), max_n, stop)


def match_gazetteer(tokens: Sequence[Token], gazetteer: Gazetteer) -> list[MatchSpan]:
    """Case-insensitive exact phrase matches, longest first, non-overlapping.

    The scan moves left to right and skips past each accepted match, so a
    phrase starting inside an accepted span is not matched again.
    """
    if not gazetteer.entries:
        return []
    words = [tok.text.lower() for tok in tokens]
    spans: list[MatchSpan] = []
    i = 0
    n = len(words)
    while i < n:
        matched = 0
        for size in range(min(gazetteer.max_n, n - i), 0, -1):
            if tuple(words[i : i + size]) in gazetteer.entries:
                matched = size
                break
        if matched:
            spans.append(_span(i, i + matched, EntityLabel.VULNERABILITY_RELEVANT_TERM, "gazetteer"))
            i += matched
        else:
            i += 1
    return spans


def resolve_and_tag(tokens: Sequence[Token], spans: Sequence[MatchSpan]) -> list[AnnotatedToken]:
    """Resolve overlaps and convert the surviving spans to IOB annotations.

    Candidates are ranked by (source priority, longer span, smaller start)
    and accepted greedily when they do not overlap an accepted span. The
    first token of a span gets ``B``, the rest ``I``; everything else is
    ``O`` with provenance ``none``.
    """
    n = len(tokens)
    for span in spans:
        if span.end > n:
            raise InvalidParameterError(f"span [{span.start}, {span.end}) exceeds {n} tokens")
    occupied = [False] * n
    accepted: list[MatchSpan] = []
    for span in sorted(spans, key=lambda s: (s.priority, s.start - s.end, s.start)):
        if not any(occupied[span.start : span.end]):
            accepted.append(span)
            for i in range(span.start, span.end):
                occupied[i] = True
    tags: list[IOBTag] = [IOBTag("O")] * n
    provenance = ["none"] * n
    for span in accepted:
        for i in range(span.start, span.end):
            tags[i] = IOBTag("B" if i == span.start else "I", span.label)
            provenance[i] = span.source
    return [AnnotatedToken(tok, tags[i], "", provenance[i]) for i, tok in enumerate(tokens)]


def label_description(
    record: StructuredRecord,
    gazetteer: Gazetteer = EMPTY_GAZETTEER,
    config: FeatureConfig = DEFAULT_CONFIG,
    source_kind: str = "other",
) -> AnnotatedDescription | None:
    """Run the full rule pipeline over one record's description.

    Returns None when the description is empty.
    """
    if not record.description.strip():
        return None
    tokens = tokenize(record.description)
    record_spans = match_record(tokens, record)
    heuristic_spans = apply_heuristics(tokens, record_spans, config.file_extensions)
    gazetteer_spans = match_gazetteer(tokens, gazetteer)
    annotated = resolve_and_tag(tokens, record_spans + heuristic_spans + gazetteer_spans)
    pos = pos_tag(tokens, config.pos_provider)
    rows = [(at.token.text, at.iob, pos[i], at.provenance) for i, at in enumerate(annotated)]
    return build_description(record.id, source_kind, rows)


def _label_one(args) -> AnnotatedDescription | None:
    record, gazetteer, config, source_kind = args
    return label_description(record, gazetteer, config, source_kind)


def autolabel_corpus(
    records: Sequence[StructuredRecord],
    gazetteer: Gazetteer = EMPTY_GAZETTEER,
    *,
    config: FeatureConfig = DEFAULT_CONFIG,
    source_kind: str = "other",
    jobs: int = 1,
) -> Corpus:
    """Label every record's description; records with empty descriptions are
    skipped and counted in a warning. Deterministic for fixed inputs, also
    with ``jobs > 1`` (per-description labeling is order-preserving)."""
    if jobs > 1 and len(records) > 1:
        from multiprocessing import Pool

        with Pool(processes=jobs) as pool:
            results = pool.map(
                _label_one,
                [(record, gazetteer, config, source_kind) for record in records],
                chunksize=max(1, len(records) // (jobs * 4)),
            )
    else:
        results = [label_description(r, gazetteer, config, source_kind) for r in records]
    skipped = sum(1 for r in results if r is None)
    if skipped:
        logger.warning("skipped %d record(s) with empty descriptions", skipped)
    return Corpus.from_descriptions(r for r in results if r is not None)


# ---------------------------------------------------------------------------
# File formats: records as JSON lines, gazetteers and stoplists as one
# space-separated phrase per line.
# ---------------------------------------------------------------------------

_RECORD_KEYS = ("id", "vendors", "products", "versions", "languages", "cwe", "description")


def read_records(path: str | Path) -> list[StructuredRecord]:
    records: list[StructuredRecord] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(data, dict):
                raise RecordFormatError("record line must be a JSON object", line_no)
            try:
                record = StructuredRecord(
                    id=data["id"],
                    vendors=tuple(data.get("vendors", ())),
                    products=tuple(data.get("products", ())),
                    versions=tuple(data.get("versions", ())),
                    languages=tuple(data.get("languages", ())),
                    cwe_id=data.get("cwe", ""),
                    description=data.get("description", ""),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise RecordFormatError(f"bad record: {exc}", line_no) from None
            if record.id in seen_ids:
                raise RecordFormatError(f"duplicate record id {record.id!r}", line_no)
            seen_ids.add(record.id)
            records.append(record)
    return records


def write_records(records: Sequence[StructuredRecord], path: str | Path) -> None:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "id": r.id,
                    "vendors": list(r.vendors),
                    "products": list(r.products),
                    "versions": list(r.versions),
                    "languages": list(r.languages),
                    "cwe": r.cwe_id,
                    "description": r.description,
                },
                ensure_ascii=False,
            )
        )
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_phrases(path: str | Path) -> frozenset[tuple[str, ...]]:
    """Phrases from a gazetteer or stoplist file, one per line."""
    phrases = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = tuple(line.split())
            if parts:
                phrases.add(parts)
    return frozenset(phrases)


def read_gazetteer(path: str | Path, stoplist: Iterable[tuple[str, ...]] = frozenset()) -> Gazetteer:
    stop = frozenset(tuple(e) for e in stoplist)
    entries = read_phrases(path) - stop
    max_n = max((len(e) for e in entries), default=1)
    return Gazetteer(entries, max_n, stop)


def write_gazetteer(gazetteer: Gazetteer, path: str | Path) -> None:
    lines = sorted(" ".join(entry) for entry in gazetteer.entries)
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))
