"""Word-shape tests, a pluggable POS provider, and the binary feature
templates for both tagging stages.

Feature ids are namespaced strings such as ``w0=safari``, ``pos-1=DET``,
``iob-1=B``, ``bi:iob-1,w0=B|safari``, ``shape0:camel`` and ``gaz:product``.
Word identities are lowercased inside feature keys; capitalization
information travels through the shape flags instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from sys import intern
from typing import Sequence

from .corpus import DEFAULT_FILE_EXTENSIONS, AnnotatedDescription, EntityLabel, Token
from .errors import InvalidParameterError

#: Reserved context symbols; the tokenizer can never produce them because
#: ``<`` and ``>`` always split off as punctuation.
BOUNDARY_START = "<S>"
BOUNDARY_END = "<E>"

_CAMEL_RX = re.compile(r"[a-z][A-Za-z0-9]*[A-Z]")
_SNAKE_RX = re.compile(r"[A-Za-z0-9]_[A-Za-z0-9]")


@dataclass(frozen=True, slots=True)
class WordShape:
    """Surface-shape flags; each is a pure function of the token text."""

    begins_digit: bool
    interior_digit: bool
    begins_capital: bool
    camel_case: bool
    snake_case: bool
    contains_punct: bool


def word_shape(text: str) -> WordShape:
    if not text:
        raise InvalidParameterError("word_shape requires non-empty token text")
    begins_digit = text[0].isdigit()
    return WordShape(
        begins_digit=begins_digit,
        # A digit after a non-digit start, e.g. x86.
        interior_digit=not begins_digit and any(ch.isdigit() for ch in text[1:]),
        begins_capital=text[0].isupper(),
        # A lowercase letter later followed by an uppercase one, with no
        # separator characters between them.
        camel_case=_CAMEL_RX.search(text) is not None,
        snake_case=_SNAKE_RX.search(text) is not None,
        contains_punct=any(not ch.isalnum() for ch in text),
    )


_SHAPE_SHORT_NAMES = (
    ("begins_digit", "begins-digit"),
    ("interior_digit", "interior-digit"),
    ("begins_capital", "begins-capital"),
    ("camel_case", "camel"),
    ("snake_case", "snake"),
    ("contains_punct", "punct"),
)


def shape_flag_names(text: str) -> tuple[str, ...]:
    """Short names of the true shape flags, in fixed order."""
    shape = word_shape(text)
    return tuple(short for attr, short in _SHAPE_SHORT_NAMES if getattr(shape, attr))


class HeuristicPosTagger:
    """Coarse rule-based POS provider over a 12-tag closed set.

    Total and deterministic: punctuation and digit-leading tokens first,
    then a closed-class lexicon, capitalized non-initial tokens, suffix
    rules, and NOUN as the default.
    """

    name = "heuristic"
    tagset = ("NUM", "PUNCT", "PROP", "VBG", "VBD", "ADV", "ADJ", "DET", "PREP", "PRON", "CONJ", "NOUN")

    _DET = frozenset("the a an this that these those each every any some no such".split())
    _PREP = frozenset(
        "in of to on at by for with from via through before after during under over "
        "against between within without into upon across per".split()
    )
    _PRON = frozenset("it its they their them he she his her we our you your i who which what".split())
    _CONJ = frozenset("and or but nor so yet when while because if than as".split())
    _ADJ_SUFFIXES = ("ous", "ive", "able", "ible", "ful", "less", "ic", "al")

    def tag(self, tokens: Sequence[Token]) -> list[str]:
        out: list[str] = []
        for tok in tokens:
            text = tok.text
            lower = text.lower()
            if all(not ch.isalnum() for ch in text):
                out.append("PUNCT")
            elif text[0].isdigit():
                out.append("NUM")
            elif lower in self._DET:
                out.append("DET")
            elif lower in self._PREP:
                out.append("PREP")
            elif lower in self._PRON:
                out.append("PRON")
            elif lower in self._CONJ:
                out.append("CONJ")
            elif tok.index > 0 and text[0].isupper():
                out.append("PROP")
            elif len(text) > 4 and lower.endswith("ing"):
                out.append("VBG")
            elif len(text) > 3 and lower.endswith("ed"):
                out.append("VBD")
            elif len(text) > 3 and lower.endswith("ly"):
                out.append("ADV")
            elif len(text) > 4 and lower.endswith(self._ADJ_SUFFIXES):
                out.append("ADJ")
            else:
                out.append("NOUN")
        return out


POS_PROVIDERS = {HeuristicPosTagger.name: HeuristicPosTagger()}


def get_pos_provider(name: str) -> HeuristicPosTagger:
    try:
        return POS_PROVIDERS[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown POS provider {name!r}; available: {sorted(POS_PROVIDERS)}"
        ) from None


def pos_tag(tokens: Sequence[Token], provider: str = "heuristic") -> list[str]:
    """Assign one POS tag per token using the named provider."""
    return get_pos_provider(provider).tag(tokens)


@dataclass(frozen=True, slots=True)
class FeatureConfig:
    """Template-group toggles plus fixed resources for feature extraction."""

    word_unigrams: bool = True
    pos_unigrams: bool = True
    tag_history: bool = True
    bigrams: bool = True
    shapes: bool = True
    gazetteer: bool = True
    pos_provider: str = "heuristic"
    file_extensions: tuple[str, ...] = tuple(sorted(DEFAULT_FILE_EXTENSIONS))

    def to_dict(self) -> dict:
        return {
            "word_unigrams": self.word_unigrams,
            "pos_unigrams": self.pos_unigrams,
            "tag_history": self.tag_history,
            "bigrams": self.bigrams,
            "shapes": self.shapes,
            "gazetteer": self.gazetteer,
            "pos_provider": self.pos_provider,
            "file_extensions": list(self.file_extensions),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(f"unknown feature config keys: {sorted(unknown)}")
        if "file_extensions" in data:
            data = dict(data, file_extensions=tuple(data["file_extensions"]))
        return cls(**data)


DEFAULT_CONFIG = FeatureConfig()


@dataclass(frozen=True, slots=True)
class TrainGazetteers:
    """Vendor/product token sets collected from training-split annotations
    only; never populated from test data."""

    vendor_terms: frozenset[str] = frozenset()
    product_terms: frozenset[str] = frozenset()


EMPTY_TRAIN_GAZETTEERS = TrainGazetteers()


def collect_train_gazetteers(descriptions: Sequence[AnnotatedDescription]) -> TrainGazetteers:
    vendors: set[str] = set()
    products: set[str] = set()
    for desc in descriptions:
        for at in desc.tokens:
            if at.iob.label is EntityLabel.SOFTWARE_VENDOR:
                vendors.add(at.token.text.lower())
            elif at.iob.label is EntityLabel.SOFTWARE_PRODUCT:
                products.add(at.token.text.lower())
    return TrainGazetteers(frozenset(vendors), frozenset(products))


class DescriptionContext:
    """Precomputed per-description context: lowercased words, POS tags and
    shape flags, with boundary symbols outside the token range."""

    __slots__ = ("words", "pos", "shapes", "n")

    def __init__(self, words: tuple[str, ...], pos: tuple[str, ...], shapes: tuple[tuple[str, ...], ...]):
        if not (len(words) == len(pos) == len(shapes)):
            raise InvalidParameterError("words, pos and shapes must align")
        self.words = words
        self.pos = pos
        self.shapes = shapes
        self.n = len(words)

    @classmethod
    def build(cls, tokens: Sequence[Token], pos_tags: Sequence[str] | None = None,
              provider: str = "heuristic") -> "DescriptionContext":
        if pos_tags is None:
            pos_tags = pos_tag(tokens, provider)
        words = tuple(intern(tok.text.lower()) for tok in tokens)
        shapes = tuple(shape_flag_names(tok.text) for tok in tokens)
        return cls(words, tuple(intern(p) for p in pos_tags), shapes)

    def word(self, i: int) -> str:
        if 0 <= i < self.n:
            return self.words[i]
        return BOUNDARY_START if i < 0 else BOUNDARY_END

    def pos_at(self, i: int) -> str:
        if 0 <= i < self.n:
            return self.pos[i]
        return BOUNDARY_START if i < 0 else BOUNDARY_END

    def shape(self, i: int) -> tuple[str, ...]:
        if 0 <= i < self.n:
            return self.shapes[i]
        return ()


def context_for_description(desc: AnnotatedDescription,
                            config: FeatureConfig = DEFAULT_CONFIG) -> DescriptionContext:
    """Context from a description, reusing stored POS tags when complete."""
    tokens = [at.token for at in desc.tokens]
    stored = [at.pos for at in desc.tokens]
    pos = stored if all(stored) else None
    return DescriptionContext.build(tokens, pos, config.pos_provider)


_OFFSETS = (-2, -1, 0, 1, 2)
_OFF = {-2: "-2", -1: "-1", 0: "0", 1: "+1", 2: "+2"}


def _surface_features(ctx: DescriptionContext, i: int, config: FeatureConfig,
                      out: list[str]) -> None:
    # Word/POS unigrams, the POS bigram, and shape flags shared by both stages.
    if config.word_unigrams:
        for off in _OFFSETS:
            out.append(intern(f"w{_OFF[off]}={ctx.word(i + off)}"))
    if config.pos_unigrams:
        for off in (-2, -1, 0, 1):
            out.append(intern(f"pos{_OFF[off]}={ctx.pos_at(i + off)}"))
    if config.bigrams:
        out.append(intern(f"bi:pos-1,w0={ctx.pos_at(i - 1)}|{ctx.word(i)}"))
    if config.shapes:
        for off in _OFFSETS:
            for flag in ctx.shape(i + off):
                out.append(intern(f"shape{_OFF[off]}:{flag}"))


def iob_static_features(ctx: DescriptionContext, i: int,
                        config: FeatureConfig = DEFAULT_CONFIG) -> list[str]:
    """Stage-1 features that do not depend on the tag history."""
    out: list[str] = []
    _surface_features(ctx, i, config, out)
    return out


def iob_dynamic_features(ctx: DescriptionContext, i: int, prev2: str, prev1: str,
                         config: FeatureConfig = DEFAULT_CONFIG) -> list[str]:
    """Stage-1 features over the previous two stage-1 tags."""
    out: list[str] = []
    if config.tag_history:
        out.append(intern(f"iob-1={prev1}"))
        out.append(intern(f"iob-2={prev2}"))
    if config.bigrams:
        out.append(intern(f"bi:iob-2,iob-1={prev2}|{prev1}"))
        out.append(intern(f"bi:iob-1,w0={prev1}|{ctx.word(i)}"))
    return out


def iob_features(ctx: DescriptionContext, i: int, prev_tags: tuple[str, str],
                 config: FeatureConfig = DEFAULT_CONFIG) -> frozenset[str]:
    """Full stage-1 feature set at position ``i``.

    ``prev_tags`` holds (tag at i-2, tag at i-1); pass boundary symbols at
    the start of the description.
    """
    prev2, prev1 = prev_tags
    return frozenset(
        iob_static_features(ctx, i, config) + iob_dynamic_features(ctx, i, prev2, prev1, config)
    )


def _iob_at(iob_tags: Sequence[str], i: int) -> str:
    if 0 <= i < len(iob_tags):
        return iob_tags[i]
    return BOUNDARY_START if i < 0 else BOUNDARY_END


def domain_static_features(ctx: DescriptionContext, i: int, iob_tags: Sequence[str],
                           gazetteers: TrainGazetteers = EMPTY_TRAIN_GAZETTEERS,
                           config: FeatureConfig = DEFAULT_CONFIG) -> list[str]:
    """Stage-2 features fixed once stage-1 tags are assigned.

    Includes the stage-1 tag window because stage 2 runs after stage 1 has
    tagged the whole description.
    """
    out: list[str] = []
    _surface_features(ctx, i, config, out)
    if config.tag_history:
        for off in _OFFSETS:
            out.append(intern(f"iob{_OFF[off]}={_iob_at(iob_tags, i + off)}"))
    if config.bigrams:
        out.append(intern(f"bi:iob-1,w0={_iob_at(iob_tags, i - 1)}|{ctx.word(i)}"))
    if config.gazetteer:
        w = ctx.word(i)
        if w in gazetteers.vendor_terms:
            out.append("gaz:vendor")
        if w in gazetteers.product_terms:
            out.append("gaz:product")
    return out


def domain_dynamic_features(ctx: DescriptionContext, i: int, prev2: str, prev1: str,
                            config: FeatureConfig = DEFAULT_CONFIG) -> list[str]:
    """Stage-2 features over the previous two domain labels."""
    out: list[str] = []
    if config.tag_history:
        out.append(intern(f"dom-1={prev1}"))
        out.append(intern(f"dom-2={prev2}"))
    if config.bigrams:
        out.append(intern(f"bi:dom-2,dom-1={prev2}|{prev1}"))
        out.append(intern(f"bi:dom-1,w0={prev1}|{ctx.word(i)}"))
    return out


def domain_features(ctx: DescriptionContext, i: int, iob_tags: Sequence[str],
                    prev_domain: tuple[str, str],
                    gazetteers: TrainGazetteers = EMPTY_TRAIN_GAZETTEERS,
                    config: FeatureConfig = DEFAULT_CONFIG) -> frozenset[str]:
    """Full stage-2 feature set at position ``i``.

    ``prev_domain`` holds (label at i-2, label at i-1) with boundary
    symbols at the start.
    """
    prev2, prev1 = prev_domain
    return frozenset(
        domain_static_features(ctx, i, iob_tags, gazetteers, config)
        + domain_dynamic_features(ctx, i, prev2, prev1, config)
    )
