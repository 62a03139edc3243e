"""History-based log-linear sequence tagger trained with the averaged
perceptron and decoded greedily, in two stages: span boundaries first
(O/B/I), then domain labels over every token (NONE plus the seven entity
labels).

Training compares the prediction for each token against gold, using gold
tags as history (teacher forcing), and updates weights only on errors.
Averaging is lazy: per-key running totals and timestamps stand in for
storing a weight snapshot after every example.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import (
    AnnotatedDescription,
    AnnotatedToken,
    Corpus,
    EntityLabel,
    IOBTag,
)
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    ModelFormatError,
    ModelVersionError,
)
from .features import (
    BOUNDARY_START,
    DEFAULT_CONFIG,
    EMPTY_TRAIN_GAZETTEERS,
    DescriptionContext,
    FeatureConfig,
    TrainGazetteers,
    context_for_description,
    domain_dynamic_features,
    domain_static_features,
    iob_dynamic_features,
    iob_static_features,
)
from .ioutil import atomic_write_text

MODEL_FORMAT_VERSION = 1
STAGES = ("iob", "domain")

IOB_TAGSET = ("O", "B", "I")
DOMAIN_TAGSET = ("NONE",) + tuple(label.value for label in EntityLabel)


def tagset_for_stage(stage: str) -> tuple[str, ...]:
    if stage == "iob":
        return IOB_TAGSET
    if stage == "domain":
        return DOMAIN_TAGSET
    raise InvalidParameterError(f"unknown stage {stage!r}; expected one of {STAGES}")


def score_features(
    features: Iterable[str], tag: str, weights: Mapping[tuple[str, str], float]
) -> float:
    """Sum of per-(feature, tag) weights over a binary feature set.

    Features absent from the weight map score zero.
    """
    return sum(weights.get((f, tag), 0.0) for f in features)


def tag_probability(
    features: Iterable[str],
    weights: Mapping[tuple[str, str], float],
    tagset: Sequence[str],
) -> dict[str, float]:
    """Softmax over per-tag scores, computed stably by subtracting the max
    score before exponentiating. Values sum to one."""
    if not tagset:
        raise InvalidParameterError("tagset must be non-empty")
    features = list(features)
    scores = [score_features(features, tag, weights) for tag in tagset]
    top = max(scores)
    exps = [math.exp(s - top) for s in scores]
    z = sum(exps)
    return {tag: e / z for tag, e in zip(tagset, exps)}


def _argmax(scores: Sequence[float]) -> int:
    # Strict > keeps the earliest maximum, i.e. ties break by tagset order.
    best = 0
    best_score = scores[0]
    for j in range(1, len(scores)):
        if scores[j] > best_score:
            best = j
            best_score = scores[j]
    return best


class WeightVector:
    """Perceptron weights with lazy-averaging bookkeeping.

    For each (feature, tag) coordinate the raw weight, a running weighted
    total, and the example counter at the last change are kept; flushing a
    coordinate adds ``(now - stamp) * weight`` to its total. The averaged
    vector is the mean of the per-example weight snapshots without ever
    materializing them.
    """

    __slots__ = ("n_tags", "weights", "totals", "stamps", "counter")

    def __init__(self, n_tags: int):
        if n_tags < 1:
            raise InvalidParameterError("n_tags must be >= 1")
        self.n_tags = n_tags
        self.weights: dict[str, list[float]] = {}
        self.totals: dict[str, list[float]] = {}
        self.stamps: dict[str, list[int]] = {}
        self.counter = 0

    def get(self, feature: str, tag_index: int) -> float:
        row = self.weights.get(feature)
        return row[tag_index] if row is not None else 0.0

    def score(self, features: Iterable[str]) -> list[float]:
        scores = [0.0] * self.n_tags
        weights = self.weights
        for f in features:
            row = weights.get(f)
            if row is not None:
                for j, v in enumerate(row):
                    if v:
                        scores[j] += v
        return scores

    def apply_error(self, features: Iterable[str], gold: int, pred: int) -> None:
        """Perceptron update for a mislabeled example: +1 on the gold tag and
        -1 on the predicted tag for every active feature, flushing and
        stamping exactly the touched coordinates."""
        i = self.counter
        n = self.n_tags
        for f in features:
            row = self.weights.get(f)
            if row is None:
                row = [0.0] * n
                self.weights[f] = row
                self.totals[f] = [0.0] * n
                self.stamps[f] = [0] * n
            tot = self.totals[f]
            st = self.stamps[f]
            tot[gold] += (i - st[gold]) * row[gold]
            st[gold] = i
            row[gold] += 1.0
            tot[pred] += (i - st[pred]) * row[pred]
            st[pred] = i
            row[pred] -= 1.0

    def advance(self) -> None:
        """Count one processed example (correct or not)."""
        self.counter += 1

    def averaged(self, tagset: Sequence[str]) -> dict[tuple[str, str], float]:
        """Averaged weights after a final flush; zero coordinates are omitted.
        Does not mutate the training state."""
        if self.counter == 0:
            return {}
        i = self.counter
        out: dict[tuple[str, str], float] = {}
        for f, row in self.weights.items():
            tot = self.totals[f]
            st = self.stamps[f]
            for j in range(self.n_tags):
                total = tot[j] + (i - st[j]) * row[j]
                if total:
                    out[(f, tagset[j])] = total / i
        return out

    def raw(self, tagset: Sequence[str]) -> dict[tuple[str, str], float]:
        """Current non-averaged weights as a flat map."""
        out: dict[tuple[str, str], float] = {}
        for f, row in self.weights.items():
            for j, v in enumerate(row):
                if v:
                    out[(f, tagset[j])] = v
        return out


@dataclass
class TaggerModel:
    """A trained stage with its tagset order, averaged weights, feature
    configuration and (for the domain stage) train-time gazetteers.

    The tagset order is fixed at train time and serialized because argmax
    tie-breaking depends on it.
    """

    stage: str
    tagset: tuple[str, ...]
    averaged_weights: dict[tuple[str, str], float]
    feature_config: FeatureConfig = DEFAULT_CONFIG
    train_gazetteers: TrainGazetteers = EMPTY_TRAIN_GAZETTEERS
    format_version: int = MODEL_FORMAT_VERSION
    raw_weights: dict[tuple[str, str], float] | None = field(
        default=None, repr=False, compare=False
    )
    _rows: dict[str, list[float]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        expected = tagset_for_stage(self.stage)
        if tuple(self.tagset) != expected:
            raise InvalidParameterError(
                f"tagset for stage {self.stage!r} must be {expected}, got {tuple(self.tagset)}"
            )
        self.tagset = tuple(self.tagset)
        index = {tag: j for j, tag in enumerate(self.tagset)}
        rows: dict[str, list[float]] = {}
        for (feature, tag), value in self.averaged_weights.items():
            row = rows.get(feature)
            if row is None:
                row = [0.0] * len(self.tagset)
                rows[feature] = row
            row[index[tag]] = value
        self._rows = rows

    def score_tags(self, features: Iterable[str]) -> list[float]:
        scores = [0.0] * len(self.tagset)
        rows = self._rows
        for f in features:
            row = rows.get(f)
            if row is not None:
                for j, v in enumerate(row):
                    if v:
                        scores[j] += v
        return scores


def build_training_examples(
    corpus: Corpus,
    stage: str,
    config: FeatureConfig = DEFAULT_CONFIG,
    gazetteers: TrainGazetteers = EMPTY_TRAIN_GAZETTEERS,
) -> list[list[tuple[list[str], int]]]:
    """Per-description training examples: (feature list, gold tag index).

    Histories come from gold tags, so the examples are independent of the
    training trajectory and can be built once for all epochs.
    """
    tagset = tagset_for_stage(stage)
    index = {tag: j for j, tag in enumerate(tagset)}
    per_description: list[list[tuple[list[str], int]]] = []
    for desc in corpus.descriptions:
        ctx = context_for_description(desc, config)
        examples: list[tuple[list[str], int]] = []
        if stage == "iob":
            golds = desc.iob_kinds()
            prev2 = prev1 = BOUNDARY_START
            for i, gold in enumerate(golds):
                feats = iob_static_features(ctx, i, config)
                feats += iob_dynamic_features(ctx, i, prev2, prev1, config)
                examples.append((feats, index[gold]))
                prev2, prev1 = prev1, gold
        else:
            kinds = desc.iob_kinds()
            golds = desc.domain_labels()
            prev2 = prev1 = BOUNDARY_START
            for i, gold in enumerate(golds):
                feats = domain_static_features(ctx, i, kinds, gazetteers, config)
                feats += domain_dynamic_features(ctx, i, prev2, prev1, config)
                examples.append((feats, index[gold]))
                prev2, prev1 = prev1, gold
        per_description.append(examples)
    return per_description


def train_averaged_perceptron(
    corpus: Corpus,
    stage: str,
    n_iter: int = 5,
    seed: int | None = None,
    *,
    config: FeatureConfig = DEFAULT_CONFIG,
    gazetteers: TrainGazetteers = EMPTY_TRAIN_GAZETTEERS,
) -> TaggerModel:
    """Train one stage for ``n_iter`` passes and return the averaged model.

    With ``seed`` given, description order is reshuffled each epoch by a
    deterministic generator; the default keeps input order. The returned
    model also carries the final raw (non-averaged) weights for
    diagnostics; they are not serialized.
    """
    tagset = tagset_for_stage(stage)
    if n_iter < 1:
        raise InvalidParameterError(f"n_iter must be >= 1, got {n_iter}")
    if corpus.token_count == 0:
        raise InvalidInputError("training corpus has no tokens")
    examples = build_training_examples(corpus, stage, config, gazetteers)
    wv = WeightVector(len(tagset))
    order = list(range(len(examples)))
    rng = random.Random(seed) if seed is not None else None
    for _ in range(n_iter):
        if rng is not None:
            rng.shuffle(order)
        for d in order:
            for feats, gold in examples[d]:
                pred = _argmax(wv.score(feats))
                if pred != gold:
                    wv.apply_error(feats, gold, pred)
                wv.advance()
    return TaggerModel(
        stage=stage,
        tagset=tagset,
        averaged_weights=wv.averaged(tagset),
        feature_config=config,
        train_gazetteers=gazetteers,
        raw_weights=wv.raw(tagset),
    )


def repair_kinds(kinds: Sequence[str]) -> list[str]:
    """Orphan ``I`` kinds (at the start or after ``O``) become ``B``."""
    out: list[str] = []
    for kind in kinds:
        if kind == "I" and (not out or out[-1] == "O"):
            kind = "B"
        out.append(kind)
    return out


def _decode_iob_kinds(ctx: DescriptionContext, model: TaggerModel) -> list[str]:
    config = model.feature_config
    prev2 = prev1 = BOUNDARY_START
    kinds: list[str] = []
    for i in range(ctx.n):
        feats = iob_static_features(ctx, i, config)
        feats += iob_dynamic_features(ctx, i, prev2, prev1, config)
        tag = model.tagset[_argmax(model.score_tags(feats))]
        kinds.append(tag)
        prev2, prev1 = prev1, tag
    return kinds


def _decode_domain(
    ctx: DescriptionContext, iob_kinds: Sequence[str], model: TaggerModel
) -> tuple[list[str], list[list[float]]]:
    config = model.feature_config
    gazetteers = model.train_gazetteers
    prev2 = prev1 = BOUNDARY_START
    labels: list[str] = []
    all_scores: list[list[float]] = []
    for i in range(ctx.n):
        feats = domain_static_features(ctx, i, iob_kinds, gazetteers, config)
        feats += domain_dynamic_features(ctx, i, prev2, prev1, config)
        scores = model.score_tags(feats)
        label = model.tagset[_argmax(scores)]
        labels.append(label)
        all_scores.append(scores)
        prev2, prev1 = prev1, label
    return labels, all_scores


def greedy_decode(description: AnnotatedDescription, model: TaggerModel) -> list[str]:
    """Left-to-right decode choosing the highest-scoring tag at each position
    from the already-decoded history.

    For the iob stage the output is post-repaired so it always satisfies
    the IOB invariant. For the domain stage the description must already
    carry stage-1 tags.
    """
    ctx = context_for_description(description, model.feature_config)
    if model.stage == "iob":
        return repair_kinds(_decode_iob_kinds(ctx, model))
    return _decode_domain(ctx, description.iob_kinds(), model)[0]


def _span_ranges(kinds: Sequence[str]) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    start: int | None = None
    for i, kind in enumerate(kinds):
        if kind == "B":
            if start is not None:
                spans.append((start, i))
            start = i
        elif kind == "O":
            if start is not None:
                spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(kinds)))
    return spans


def tag_pipeline(
    description: AnnotatedDescription,
    iob_model: TaggerModel,
    domain_model: TaggerModel,
) -> AnnotatedDescription:
    """Run both stages over an unlabeled description and combine the output.

    Combination rules: stage-1 ``O`` forces the final tag to ``O``; a
    ``B``/``I`` token whose domain label came out NONE takes the
    highest-scoring non-NONE label at that position; within each entity
    span every token adopts the span's majority label, ties resolved in
    favor of the ``B`` token. Provenance of labeled tokens is ``model``.
    """
    if iob_model.stage != "iob" or domain_model.stage != "domain":
        raise InvalidParameterError("tag_pipeline needs an iob-stage and a domain-stage model")
    ctx = context_for_description(description, iob_model.feature_config)
    kinds = repair_kinds(_decode_iob_kinds(ctx, iob_model))
    labels, scores = _decode_domain(ctx, kinds, domain_model)

    final = list(labels)
    for i, kind in enumerate(kinds):
        if kind == "O":
            final[i] = "NONE"
        elif final[i] == "NONE":
            # Best non-NONE label at this position; NONE sits at index 0.
            non_none = scores[i][1:]
            final[i] = domain_model.tagset[1 + _argmax(non_none)]

    for start, end in _span_ranges(kinds):
        counts = Counter(final[start:end])
        top = max(counts.values())
        leaders = {label for label, c in counts.items() if c == top}
        if final[start] in leaders:
            winner = final[start]
        else:
            winner = next(label for label in final[start:end] if label in leaders)
        for i in range(start, end):
            final[i] = winner

    annotated: list[AnnotatedToken] = []
    for i, at in enumerate(description.tokens):
        if kinds[i] == "O":
            annotated.append(AnnotatedToken(at.token, IOBTag("O"), ctx.pos[i], "none"))
        else:
            tag = IOBTag(kinds[i], EntityLabel.from_string(final[i]))
            annotated.append(AnnotatedToken(at.token, tag, ctx.pos[i], "model"))
    return AnnotatedDescription(
        description.source_id, description.source_kind, description.raw_text, tuple(annotated)
    )


def save_model(model: TaggerModel, path: str | Path) -> None:
    """Serialize a model to a versioned JSON container, atomically.

    Weights are written as sorted (feature, tag, weight) triples at full
    float precision, so files diff cleanly and round-trip exactly.
    """
    payload = {
        "format_version": model.format_version,
        "stage": model.stage,
        "tagset": list(model.tagset),
        "feature_config": model.feature_config.to_dict(),
        "train_gazetteers": {
            "vendor_terms": sorted(model.train_gazetteers.vendor_terms),
            "product_terms": sorted(model.train_gazetteers.product_terms),
        },
        "weights": [
            [feature, tag, value]
            for (feature, tag), value in sorted(model.averaged_weights.items())
        ],
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=0) + "\n")


def load_model(path: str | Path) -> TaggerModel:
    """Load a model saved by :func:`save_model`.

    Raises ModelFormatError for corrupt files and ModelVersionError when
    the format version does not match.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ModelFormatError(f"corrupt model file {path}: not a JSON object")
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"model format version {version!r} is not supported (expected {MODEL_FORMAT_VERSION})"
        )
    try:
        gaz = data["train_gazetteers"]
        return TaggerModel(
            stage=data["stage"],
            tagset=tuple(data["tagset"]),
            averaged_weights={
                (feature, tag): float(value) for feature, tag, value in data["weights"]
            },
            feature_config=FeatureConfig.from_dict(data["feature_config"]),
            train_gazetteers=TrainGazetteers(
                frozenset(gaz["vendor_terms"]), frozenset(gaz["product_terms"])
            ),
            format_version=version,
        )
    except (KeyError, TypeError, ValueError, InvalidParameterError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from None
