"""Seeded random generators for valid corpora and models, shared by tests."""

from __future__ import annotations

import random

from vulntag.corpus import (
    Corpus,
    EntityLabel,
    IOBTag,
    PROVENANCES,
    SOURCE_KINDS,
    build_description,
)
from vulntag.features import FeatureConfig, TrainGazetteers
from vulntag.tagger import TaggerModel, tagset_for_stage

_WORDS = (
    "the", "a", "safari", "chrome", "overflow", "remote", "2.5", "1.0.3",
    "camelCase", "snake_case", "foo.dll", "CVE-2011-0001", ",", ".", "(", ")",
    "allows", "attackers", "x86", "#", "und", "vector",
)
_SPAN_PROVENANCES = ("record-match", "heuristic", "gazetteer", "model")


def random_tag_rows(rng: random.Random, n_tokens: int, labeled: bool = True):
    """(text, iob, pos, provenance) rows forming a valid IOB sequence."""
    rows = []
    i = 0
    while i < n_tokens:
        text = rng.choice(_WORDS)
        if rng.random() < 0.55:
            rows.append((text, IOBTag("O"), rng.choice(("", "NOUN", "DET")), "none"))
            i += 1
        else:
            label = rng.choice(list(EntityLabel)) if labeled else None
            provenance = rng.choice(_SPAN_PROVENANCES)
            length = min(rng.randint(1, 3), n_tokens - i)
            for k in range(length):
                kind = "B" if k == 0 else "I"
                rows.append((rng.choice(_WORDS), IOBTag(kind, label), "", provenance))
            i += length
    return rows


def random_corpus(rng: random.Random, max_descriptions: int = 6, max_tokens: int = 12) -> Corpus:
    descriptions = []
    for d in range(rng.randint(0, max_descriptions)):
        rows = random_tag_rows(rng, rng.randint(1, max_tokens), labeled=rng.random() < 0.8)
        descriptions.append(
            build_description(f"desc-{d:03d}", rng.choice(SOURCE_KINDS), rows)
        )
    return Corpus.from_descriptions(descriptions)


def random_config(rng: random.Random) -> FeatureConfig:
    return FeatureConfig(
        word_unigrams=rng.random() < 0.8,
        pos_unigrams=rng.random() < 0.8,
        tag_history=rng.random() < 0.8,
        bigrams=rng.random() < 0.8,
        shapes=rng.random() < 0.8,
        gazetteer=rng.random() < 0.8,
    )


def random_model(rng: random.Random) -> TaggerModel:
    stage = rng.choice(("iob", "domain"))
    tagset = tagset_for_stage(stage)
    features = [f"w0={w}" for w in rng.sample(_WORDS, rng.randint(1, 8))]
    weights = {}
    for f in features:
        for tag in rng.sample(tagset, rng.randint(1, len(tagset))):
            weights[(f, tag)] = rng.uniform(-5.0, 5.0)
    gazetteers = TrainGazetteers(
        frozenset(rng.sample(_WORDS, rng.randint(0, 3))),
        frozenset(rng.sample(_WORDS, rng.randint(0, 3))),
    )
    return TaggerModel(
        stage=stage,
        tagset=tagset,
        averaged_weights=weights,
        feature_config=random_config(rng),
        train_gazetteers=gazetteers,
    )
