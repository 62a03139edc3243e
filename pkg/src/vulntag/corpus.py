"""Core data model: tokens, entity labels, IOB tags, descriptions, corpora.

Corpus files are UTF-8 with one token per line in tab-separated columns
``token<TAB>pos<TAB>iob-tag<TAB>provenance``, a ``# id=<id> kind=<kind>``
header line per description, and a blank line after each description.
The file format carries no inter-token spacing, so a description read back
from disk has its raw text reconstructed as the single-space join of its
tokens (the canonical form every writer in this package produces).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusFormatError
from .ioutil import atomic_write_text

SOURCE_KINDS = ("nvd", "ms-bulletin", "metasploit", "synthetic", "other")
PROVENANCES = ("record-match", "heuristic", "gazetteer", "model", "none")

#: Extensions that keep a ``name.ext`` token whole during tokenization.
DEFAULT_FILE_EXTENSIONS = frozenset(
    {"dll", "exe", "php", "c", "h", "js", "asp", "jsp", "py", "pl"}
)


class EntityLabel(enum.Enum):
    """Closed label inventory; values are the stable serialized names.

    Declaration order is load-bearing: the domain-stage tagset is built
    from it, and argmax tie-breaking follows tagset order.
    """

    SOFTWARE_VENDOR = "software-vendor"
    SOFTWARE_PRODUCT = "software-product"
    SOFTWARE_VERSION = "software-version"
    SOFTWARE_LANGUAGE = "software-language"
    VULNERABILITY_NAME = "vulnerability-name"
    SOFTWARE_SYMBOL = "software-symbol"
    VULNERABILITY_RELEVANT_TERM = "vulnerability-relevant-term"

    @classmethod
    def from_string(cls, name: str) -> "EntityLabel":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown entity label: {name!r}") from None


@dataclass(frozen=True, slots=True)
class Token:
    """One whitespace-free token with its character span in the raw text."""

    text: str
    index: int
    char_start: int
    char_end: int

    def __post_init__(self) -> None:
        if not self.text or any(ch.isspace() for ch in self.text):
            raise ValueError(f"token text must be non-empty and whitespace-free: {self.text!r}")
        if self.index < 0:
            raise ValueError(f"token index must be >= 0, got {self.index}")
        if self.char_start < 0 or self.char_end <= self.char_start:
            raise ValueError(
                f"token offsets must satisfy 0 <= start < end, got [{self.char_start}, {self.char_end})"
            )


_TOKEN_RX = re.compile(r"\w+(?:[-.]\w+)*|\S")


def file_extension_of(text: str) -> str | None:
    """Lowercased final dot-segment of a file-name-like token, else None."""
    if "." not in text or text.startswith(".") or text.endswith("."):
        return None
    return text.rsplit(".", 1)[1].lower()


def _keep_dotted_whole(piece: str) -> bool:
    # Interior dots survive in digit-bearing tokens (versions like 2.3.0)
    # and in file names ending in a known extension (foo.dll).
    if any(ch.isdigit() for ch in piece):
        return True
    ext = file_extension_of(piece)
    return ext is not None and ext in DEFAULT_FILE_EXTENSIONS


def tokenize(raw_text: str) -> list[Token]:
    """Deterministic whitespace-and-punctuation tokenizer.

    Splits on whitespace, then splits punctuation off word boundaries,
    except: dots interior to digit-bearing tokens (``2.3.0``, ``2.2.x``),
    dots in file names with a known extension (``foo.dll``), interior
    hyphens (``CVE-2012-0678``, ``cross-site``), and underscores
    (``snake_case_example``). Every token's span slices ``raw_text`` back
    to exactly its text.
    """
    tokens: list[Token] = []
    for m in _TOKEN_RX.finditer(raw_text):
        piece = m.group()
        if "." in piece and len(piece) > 1 and not _keep_dotted_whole(piece):
            offset = m.start()
            for part in re.split(r"(\.)", piece):
                if part:
                    tokens.append(Token(part, len(tokens), offset, offset + len(part)))
                    offset += len(part)
        else:
            tokens.append(Token(piece, len(tokens), m.start(), m.end()))
    return tokens


@dataclass(frozen=True, slots=True)
class IOBTag:
    """``O``, ``B`` or ``I``, optionally carrying an entity label.

    Stage-1 output uses bare kinds; the final combined output carries the
    entity label in the slot.
    """

    kind: str
    label: EntityLabel | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("O", "B", "I"):
            raise ValueError(f"IOB kind must be O, B or I, got {self.kind!r}")
        if self.kind == "O" and self.label is not None:
            raise ValueError("an O tag cannot carry an entity label")

    def to_string(self) -> str:
        if self.label is None:
            return self.kind
        return f"{self.kind}-{self.label.value}"

    @classmethod
    def parse(cls, text: str) -> "IOBTag":
        if text in ("O", "B", "I"):
            return cls(text)
        kind, sep, label = text.partition("-")
        if sep and kind in ("B", "I"):
            return cls(kind, EntityLabel.from_string(label))
        raise ValueError(f"malformed IOB tag: {text!r}")


O_TAG = IOBTag("O")


def _is_orphan(tag: IOBTag, prev: IOBTag | None) -> bool:
    if tag.kind != "I":
        return False
    if prev is None or prev.kind == "O":
        return True
    # Labels must agree when both slots are present.
    return tag.label is not None and prev.label is not None and tag.label != prev.label


def iob_violation_index(tags: Sequence[IOBTag]) -> int | None:
    """Index of the first orphan ``I`` tag, or None for a valid sequence."""
    prev: IOBTag | None = None
    for i, tag in enumerate(tags):
        if _is_orphan(tag, prev):
            return i
        prev = tag
    return None


def repair_iob(tags: Sequence[IOBTag]) -> list[IOBTag]:
    """Convert every orphan ``I`` into a ``B`` with the same label."""
    repaired: list[IOBTag] = []
    for tag in tags:
        prev = repaired[-1] if repaired else None
        if _is_orphan(tag, prev):
            tag = IOBTag("B", tag.label)
        repaired.append(tag)
    return repaired


@dataclass(frozen=True, slots=True)
class AnnotatedToken:
    """A token plus its IOB tag, POS tag, and label provenance."""

    token: Token
    iob: IOBTag = O_TAG
    pos: str = ""
    provenance: str = "none"

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance: {self.provenance!r}")
        if (self.provenance == "none") != (self.iob.kind == "O"):
            raise ValueError("provenance must be 'none' exactly when the tag is O")


@dataclass(frozen=True, slots=True)
class AnnotatedDescription:
    """One tokenized description with per-token annotations.

    Construction validates that every token span slices the raw text to
    its own text, spans do not overlap, and the tag sequence satisfies
    the IOB invariant.
    """

    source_id: str
    source_kind: str
    raw_text: str
    tokens: tuple[AnnotatedToken, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.source_id or any(ch.isspace() for ch in self.source_id):
            raise ValueError(f"source_id must be non-empty and whitespace-free: {self.source_id!r}")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind: {self.source_kind!r}")
        prev_end = 0
        for i, at in enumerate(self.tokens):
            tok = at.token
            if tok.index != i:
                raise ValueError(f"token index {tok.index} does not match position {i}")
            if self.raw_text[tok.char_start : tok.char_end] != tok.text:
                raise ValueError(f"token {i} span does not slice raw_text to {tok.text!r}")
            if tok.char_start < prev_end:
                raise ValueError(f"token {i} overlaps its predecessor")
            prev_end = tok.char_end
        bad = iob_violation_index([at.iob for at in self.tokens])
        if bad is not None:
            raise ValueError(f"invalid IOB transition at token {bad}")

    def texts(self) -> list[str]:
        return [at.token.text for at in self.tokens]

    def iob_kinds(self) -> list[str]:
        """Stage-1 view of the tag sequence: bare O/B/I kinds."""
        return [at.iob.kind for at in self.tokens]

    def domain_labels(self) -> list[str]:
        """Stage-2 view: serialized entity label per token, NONE for O."""
        return [at.iob.label.value if at.iob.label is not None else "NONE" for at in self.tokens]


@dataclass(frozen=True, slots=True)
class Corpus:
    descriptions: tuple[AnnotatedDescription, ...]
    token_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "descriptions", tuple(self.descriptions))
        total = sum(len(d.tokens) for d in self.descriptions)
        if self.token_count != total:
            raise ValueError(f"token_count {self.token_count} != actual {total}")

    @classmethod
    def from_descriptions(cls, descriptions: Iterable[AnnotatedDescription]) -> "Corpus":
        descs = tuple(descriptions)
        return cls(descs, sum(len(d.tokens) for d in descs))


def build_description(
    source_id: str,
    source_kind: str,
    rows: Sequence[tuple[str, IOBTag, str, str]],
) -> AnnotatedDescription:
    """Assemble a description in canonical form (tokens joined by one space).

    ``rows`` holds (text, iob, pos, provenance) per token.
    """
    raw_text = " ".join(text for text, _, _, _ in rows)
    annotated: list[AnnotatedToken] = []
    offset = 0
    for i, (text, iob, pos, provenance) in enumerate(rows):
        token = Token(text, i, offset, offset + len(text))
        annotated.append(AnnotatedToken(token, iob, pos, provenance))
        offset += len(text) + 1
    return AnnotatedDescription(source_id, source_kind, raw_text, tuple(annotated))


def unlabeled_description(
    raw_text: str, source_id: str, source_kind: str = "other"
) -> AnnotatedDescription:
    """Tokenize raw text into a description with all-O tags and no POS."""
    annotated = tuple(AnnotatedToken(tok) for tok in tokenize(raw_text))
    return AnnotatedDescription(source_id, source_kind, raw_text, annotated)


_HEADER_RX = re.compile(r"^# id=(\S+) kind=(\S+)$")


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus to the column format, atomically."""
    lines: list[str] = []
    for desc in corpus.descriptions:
        lines.append(f"# id={desc.source_id} kind={desc.source_kind}")
        for at in desc.tokens:
            lines.append(f"{at.token.text}\t{at.pos}\t{at.iob.to_string()}\t{at.provenance}")
        lines.append("")
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_corpus(path: str | Path, *, strict: bool = True) -> Corpus:
    """Parse a corpus file.

    In strict mode any orphan ``I`` tag raises CorpusFormatError with the
    offending line number; in repair mode it is converted to ``B``.
    Malformed lines (wrong column count, unknown tag/provenance/kind,
    provenance inconsistent with the tag) fail in both modes.
    """
    descriptions: list[AnnotatedDescription] = []
    header: tuple[str, str] | None = None
    rows: list[tuple[str, IOBTag, str, str]] = []
    prev_tag: IOBTag | None = None

    def finish() -> None:
        nonlocal header, rows, prev_tag
        if header is not None:
            descriptions.append(build_description(header[0], header[1], rows))
        header = None
        rows = []
        prev_tag = None

    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                finish()
                continue
            # Token texts never contain spaces, so "# " is unambiguous.
            if line.startswith("# "):
                m = _HEADER_RX.match(line)
                if m is None:
                    raise CorpusFormatError("malformed description header", line_no)
                finish()
                source_id, source_kind = m.groups()
                if source_kind not in SOURCE_KINDS:
                    raise CorpusFormatError(f"unknown source kind: {source_kind!r}", line_no)
                header = (source_id, source_kind)
                continue
            if header is None:
                raise CorpusFormatError("token line outside a description", line_no)
            cols = line.split("\t")
            if len(cols) != 4:
                raise CorpusFormatError(
                    f"expected 4 tab-separated columns, got {len(cols)}", line_no
                )
            text, pos, tag_str, provenance = cols
            try:
                tag = IOBTag.parse(tag_str)
            except ValueError as exc:
                raise CorpusFormatError(str(exc), line_no) from None
            if provenance not in PROVENANCES:
                raise CorpusFormatError(f"unknown provenance: {provenance!r}", line_no)
            if _is_orphan(tag, prev_tag):
                if strict:
                    raise CorpusFormatError(
                        f"orphan {tag_str!r} does not continue a span", line_no
                    )
                tag = IOBTag("B", tag.label)
            if (provenance == "none") != (tag.kind == "O"):
                raise CorpusFormatError(
                    "provenance 'none' must pair exactly with tag O", line_no
                )
            try:
                Token(text, len(rows), 0, len(text))
            except ValueError as exc:
                raise CorpusFormatError(str(exc), line_no) from None
            rows.append((text, tag, pos, provenance))
            prev_tag = tag
    finish()
    return Corpus.from_descriptions(descriptions)
