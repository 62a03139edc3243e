"""Token-level metrics and repeated random sub-sampling validation.

Precision and recall are micro-averaged over the non-background labels
(``O`` for the boundary stage, ``NONE`` for the domain stage); accuracy
covers every token including the background. Validation trains on a fresh
random train/test split per fold and scores the two stages separately.
"""

from __future__ import annotations

import json
import random
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Corpus
from .errors import InvalidInputError, InvalidParameterError
from .features import DEFAULT_CONFIG, FeatureConfig, collect_train_gazetteers
from .ioutil import atomic_write_text
from .tagger import tag_pipeline, train_averaged_perceptron


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class ConfusionCounts:
    """Per-label true/false positive and false negative counts plus token
    accuracy counters."""

    background: str
    tp: Counter
    fp: Counter
    fn: Counter
    correct_tokens: int
    total_tokens: int

    @property
    def precision(self) -> float:
        predicted = sum(self.tp.values()) + sum(self.fp.values())
        return sum(self.tp.values()) / predicted if predicted else 0.0

    @property
    def recall(self) -> float:
        gold = sum(self.tp.values()) + sum(self.fn.values())
        return sum(self.tp.values()) / gold if gold else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    @property
    def accuracy(self) -> float:
        return self.correct_tokens / self.total_tokens if self.total_tokens else 0.0


def compute_metrics(
    gold: Sequence[Sequence[str]],
    predicted: Sequence[Sequence[str]],
    stage: str,
) -> ConfusionCounts:
    """Token-level confusion counts for aligned gold/predicted sequences.

    A token is a true positive when predicted equals gold and is not the
    background tag; a non-background prediction differing from gold is a
    false positive for the predicted label, and a missed non-background
    gold tag is a false negative for the gold label.
    """
    if stage == "iob":
        background = "O"
    elif stage == "domain":
        background = "NONE"
    else:
        raise InvalidParameterError(f"unknown stage {stage!r}")
    if len(gold) != len(predicted):
        raise InvalidInputError(
            f"gold has {len(gold)} sequences, predicted has {len(predicted)}"
        )
    counts = ConfusionCounts(background, Counter(), Counter(), Counter(), 0, 0)
    for seq_no, (g_seq, p_seq) in enumerate(zip(gold, predicted)):
        if len(g_seq) != len(p_seq):
            raise InvalidInputError(
                f"sequence {seq_no}: gold has {len(g_seq)} tokens, predicted has {len(p_seq)}"
            )
        for g, p in zip(g_seq, p_seq):
            counts.total_tokens += 1
            if g == p:
                counts.correct_tokens += 1
                if g != background:
                    counts.tp[g] += 1
            else:
                if p != background:
                    counts.fp[p] += 1
                if g != background:
                    counts.fn[g] += 1
    return counts


@dataclass(frozen=True)
class EvalReport:
    """Per-fold and mean scores for one stage, plus training wall time."""

    stage: str
    n_descriptions: int
    n_tokens: int
    fold_precision: tuple[float, ...]
    fold_recall: tuple[float, ...]
    fold_f1: tuple[float, ...]
    fold_accuracy: tuple[float, ...]
    fold_train_seconds: tuple[float, ...]

    @property
    def mean_precision(self) -> float:
        return sum(self.fold_precision) / len(self.fold_precision)

    @property
    def mean_recall(self) -> float:
        return sum(self.fold_recall) / len(self.fold_recall)

    @property
    def mean_f1(self) -> float:
        return sum(self.fold_f1) / len(self.fold_f1)

    @property
    def mean_accuracy(self) -> float:
        return sum(self.fold_accuracy) / len(self.fold_accuracy)

    @property
    def train_time_seconds(self) -> float:
        return sum(self.fold_train_seconds) / len(self.fold_train_seconds)

    def to_dict(self, include_timing: bool = False) -> dict:
        data = {
            "stage": self.stage,
            "n_descriptions": self.n_descriptions,
            "n_tokens": self.n_tokens,
            "fold_precision": list(self.fold_precision),
            "fold_recall": list(self.fold_recall),
            "fold_f1": list(self.fold_f1),
            "fold_accuracy": list(self.fold_accuracy),
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_f1": self.mean_f1,
            "mean_accuracy": self.mean_accuracy,
        }
        if include_timing:
            data["fold_train_seconds"] = list(self.fold_train_seconds)
            data["train_time_seconds"] = self.train_time_seconds
        return data


def cross_validate(
    corpus: Corpus,
    n: int | None = None,
    folds: int = 5,
    split_fraction: float = 0.8,
    n_iter: int = 5,
    seed: int = 0,
    *,
    config: FeatureConfig = DEFAULT_CONFIG,
) -> dict[str, EvalReport]:
    """Repeated random sub-sampling validation.

    Each fold independently samples ``n`` descriptions without replacement,
    splits them ``split_fraction`` into train and test, collects the
    vendor/product gazetteers from the training split only, trains both
    stages, decodes the test split with the full pipeline, and scores each
    stage separately. Reproducible for a fixed seed (wall time aside).
    """
    total = len(corpus.descriptions)
    if n is None:
        n = total
    if not 1 <= n <= total:
        raise InvalidParameterError(f"n must be between 1 and {total}, got {n}")
    if folds < 1:
        raise InvalidParameterError(f"folds must be >= 1, got {folds}")
    if not 0.0 < split_fraction < 1.0:
        raise InvalidParameterError(f"split_fraction must be in (0, 1), got {split_fraction}")
    train_size = int(n * split_fraction)
    if train_size < 1 or train_size >= n:
        raise InvalidParameterError(
            f"split_fraction {split_fraction} leaves no train or no test data for n={n}"
        )

    rng = random.Random(seed)
    per_stage: dict[str, dict[str, list[float]]] = {
        stage: {"p": [], "r": [], "f1": [], "a": [], "t": []} for stage in ("iob", "domain")
    }
    sampled_tokens: list[int] = []
    for _ in range(folds):
        train_idx, test_idx = fold_split(rng, total, n, train_size)
        train_descs = [corpus.descriptions[i] for i in train_idx]
        test_descs = [corpus.descriptions[i] for i in test_idx]
        sampled_tokens.append(sum(len(d.tokens) for d in train_descs + test_descs))

        train_corpus = Corpus.from_descriptions(train_descs)
        gazetteers = collect_train_gazetteers(train_descs)
        started = time.perf_counter()
        iob_model = train_averaged_perceptron(train_corpus, "iob", n_iter, config=config)
        iob_seconds = time.perf_counter() - started
        started = time.perf_counter()
        domain_model = train_averaged_perceptron(
            train_corpus, "domain", n_iter, config=config, gazetteers=gazetteers
        )
        domain_seconds = time.perf_counter() - started

        predictions = [tag_pipeline(desc, iob_model, domain_model) for desc in test_descs]
        iob_counts = compute_metrics(
            [d.iob_kinds() for d in test_descs], [p.iob_kinds() for p in predictions], "iob"
        )
        domain_counts = compute_metrics(
            [d.domain_labels() for d in test_descs],
            [p.domain_labels() for p in predictions],
            "domain",
        )
        for stage, counts, seconds in (
            ("iob", iob_counts, iob_seconds),
            ("domain", domain_counts, domain_seconds),
        ):
            per_stage[stage]["p"].append(counts.precision)
            per_stage[stage]["r"].append(counts.recall)
            per_stage[stage]["f1"].append(counts.f1)
            per_stage[stage]["a"].append(counts.accuracy)
            per_stage[stage]["t"].append(seconds)

    n_tokens = round(sum(sampled_tokens) / len(sampled_tokens))
    return {
        stage: EvalReport(
            stage=stage,
            n_descriptions=n,
            n_tokens=n_tokens,
            fold_precision=tuple(values["p"]),
            fold_recall=tuple(values["r"]),
            fold_f1=tuple(values["f1"]),
            fold_accuracy=tuple(values["a"]),
            fold_train_seconds=tuple(values["t"]),
        )
        for stage, values in per_stage.items()
    }


def fold_split(
    rng: random.Random, total: int, n: int, train_size: int
) -> tuple[list[int], list[int]]:
    """One fold's train/test description indices: a fresh sample of ``n``
    without replacement, split at ``train_size``. Train and test are always
    disjoint."""
    sample = rng.sample(range(total), n)
    return sample[:train_size], sample[train_size:]


def write_report(reports: dict[str, EvalReport], path: str | Path, *, folds: int) -> None:
    """Structured report file; wall-clock timing is deliberately excluded so
    identical seeds produce byte-identical files."""
    payload = {
        "folds": folds,
        "stages": {stage: report.to_dict(include_timing=False) for stage, report in sorted(reports.items())},
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=1, sort_keys=True) + "\n")


def format_report_table(reports: dict[str, EvalReport]) -> str:
    """Column-aligned summary (n, P, R, F1, A, T) with one row per stage."""
    lines = [f"{'stage':<8}{'n':>7}{'P':>8}{'R':>8}{'F1':>8}{'A':>8}{'T(s)':>9}"]
    for stage in ("iob", "domain"):
        if stage not in reports:
            continue
        r = reports[stage]
        lines.append(
            f"{stage:<8}{r.n_descriptions:>7}"
            f"{r.mean_precision:>8.3f}{r.mean_recall:>8.3f}"
            f"{r.mean_f1:>8.3f}{r.mean_accuracy:>8.3f}"
            f"{r.train_time_seconds:>9.3f}"
        )
    return "\n".join(lines)
