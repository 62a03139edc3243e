import random

import pytest

from vulntag.autolabel import autolabel_corpus
from vulntag.corpus import tokenize
from vulntag.errors import InvalidInputError, InvalidParameterError
from vulntag.evaluate import (
    compute_metrics,
    cross_validate,
    f1_score,
    fold_split,
    format_report_table,
)
from vulntag.synth import (
    CWE_RELEVANT_TERMS,
    DISTRACTOR_PRODUCTS,
    LANGUAGES,
    PRODUCTS,
    SHARED_RELEVANT_TERMS,
    VENDORS,
    generate_synthetic,
    synthetic_gazetteer,
)


def per_label_oracle(gold_seqs, pred_seqs, background):
    """Independent metric oracle: exhaustive per-label pair counting."""
    labels = {t for seq in list(gold_seqs) + list(pred_seqs) for t in seq if t != background}
    tp = fp = fn = 0
    correct = total = 0
    for label in labels:
        for g_seq, p_seq in zip(gold_seqs, pred_seqs):
            for g, p in zip(g_seq, p_seq):
                if p == label and g == label:
                    tp += 1
                elif p == label and g != label:
                    fp += 1
                elif g == label and p != label:
                    fn += 1
    for g_seq, p_seq in zip(gold_seqs, pred_seqs):
        for g, p in zip(g_seq, p_seq):
            total += 1
            correct += g == p
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    accuracy = correct / total if total else 0.0
    return precision, recall, f1_score(precision, recall), accuracy


class TestComputeMetrics:
    def test_perfect_prediction(self):
        gold = [["O", "B", "I"], ["B", "O"]]
        counts = compute_metrics(gold, gold, "iob")
        assert counts.precision == counts.recall == counts.f1 == counts.accuracy == 1.0

    def test_formula_example(self):
        gold = [["B", "B", "B", "O"]]
        pred = [["B", "B", "O", "B"]]
        counts = compute_metrics(gold, pred, "iob")
        assert counts.precision == pytest.approx(2 / 3)
        assert counts.recall == pytest.approx(2 / 3)
        assert counts.f1 == pytest.approx(2 / 3)

    def test_all_background_prediction(self):
        gold = [["B", "I", "O"]]
        pred = [["O", "O", "O"]]
        counts = compute_metrics(gold, pred, "iob")
        assert counts.precision == 0.0
        assert counts.recall == 0.0
        assert counts.f1 == 0.0

    def test_accuracy_includes_background(self):
        gold = [["O", "O", "B"]]
        pred = [["O", "B", "B"]]
        counts = compute_metrics(gold, pred, "iob")
        assert counts.accuracy == pytest.approx(2 / 3)

    def test_domain_stage_background_is_none(self):
        gold = [["NONE", "software-vendor"]]
        pred = [["NONE", "software-vendor"]]
        counts = compute_metrics(gold, pred, "domain")
        assert counts.precision == 1.0 and sum(counts.tp.values()) == 1

    def test_sequence_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            compute_metrics([["O"]], [], "iob")

    def test_token_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            compute_metrics([["O", "B"]], [["O"]], "iob")

    def test_unknown_stage(self):
        with pytest.raises(InvalidParameterError):
            compute_metrics([], [], "span")

    def test_agrees_with_pair_counting_oracle(self):
        rng = random.Random(31)
        tags = ["O", "B", "I"]
        for _ in range(150):
            gold, pred = [], []
            for _ in range(rng.randint(1, 5)):
                n = rng.randint(1, 12)
                gold.append([rng.choice(tags) for _ in range(n)])
                pred.append([rng.choice(tags) for _ in range(n)])
            counts = compute_metrics(gold, pred, "iob")
            p, r, f1, a = per_label_oracle(gold, pred, "O")
            assert counts.precision == p
            assert counts.recall == r
            assert counts.f1 == f1
            assert counts.accuracy == a

    def test_permutation_invariance(self):
        rng = random.Random(5)
        gold = [["O", "B"], ["B", "I", "O"], ["O"]]
        pred = [["B", "B"], ["B", "O", "O"], ["B"]]
        counts = compute_metrics(gold, pred, "iob")
        order = [2, 0, 1]
        shuffled = compute_metrics([gold[i] for i in order], [pred[i] for i in order], "iob")
        assert (counts.precision, counts.recall, counts.accuracy) == (
            shuffled.precision,
            shuffled.recall,
            shuffled.accuracy,
        )


class TestFoldSplit:
    def test_disjoint_and_sized(self):
        rng = random.Random(0)
        for _ in range(100):
            total = rng.randint(5, 40)
            n = rng.randint(2, total)
            train_size = rng.randint(1, n - 1)
            train, test = fold_split(rng, total, n, train_size)
            assert len(train) == train_size and len(test) == n - train_size
            assert set(train).isdisjoint(test)
            assert all(0 <= i < total for i in train + test)
            assert len(set(train + test)) == n


def small_auto_corpus(n=30, seed=5):
    records, _ = generate_synthetic(n, seed=seed)
    return autolabel_corpus(records, synthetic_gazetteer(), source_kind="synthetic")


class TestCrossValidate:
    def test_reproducible_and_mean_is_arithmetic(self):
        corpus = small_auto_corpus()
        a = cross_validate(corpus, n=20, folds=2, n_iter=2, seed=9)
        b = cross_validate(corpus, n=20, folds=2, n_iter=2, seed=9)
        for stage in ("iob", "domain"):
            assert a[stage].fold_f1 == b[stage].fold_f1
            assert a[stage].fold_precision == b[stage].fold_precision
            assert a[stage].mean_f1 == pytest.approx(sum(a[stage].fold_f1) / 2)
            for p, r, f1 in zip(a[stage].fold_precision, a[stage].fold_recall, a[stage].fold_f1):
                assert f1 == pytest.approx(f1_score(p, r))

    def test_different_seed_changes_sampling(self):
        corpus = small_auto_corpus()
        a = cross_validate(corpus, n=20, folds=1, n_iter=1, seed=1)
        b = cross_validate(corpus, n=20, folds=1, n_iter=1, seed=2)
        # Not guaranteed different in principle, but these samples are.
        assert a["iob"].fold_accuracy != b["iob"].fold_accuracy

    def test_parameter_validation(self):
        corpus = small_auto_corpus(10)
        with pytest.raises(InvalidParameterError):
            cross_validate(corpus, n=999)
        with pytest.raises(InvalidParameterError):
            cross_validate(corpus, n=10, folds=0)
        with pytest.raises(InvalidParameterError):
            cross_validate(corpus, n=10, split_fraction=1.0)
        with pytest.raises(InvalidParameterError):
            cross_validate(corpus, n=1, split_fraction=0.5)

    def test_report_table_layout(self):
        corpus = small_auto_corpus()
        reports = cross_validate(corpus, n=20, folds=1, n_iter=1, seed=3)
        table = format_report_table(reports)
        lines = table.splitlines()
        assert lines[0].split() == ["stage", "n", "P", "R", "F1", "A", "T(s)"]
        assert lines[1].startswith("iob") and lines[2].startswith("domain")


class TestGenerator:
    def test_zero_records(self):
        records, corpus = generate_synthetic(0, seed=1)
        assert records == [] and corpus.token_count == 0

    def test_negative_rejected(self):
        with pytest.raises(InvalidParameterError):
            generate_synthetic(-1)

    def test_deterministic_per_seed(self):
        a_records, a_gold = generate_synthetic(20, seed=42)
        b_records, b_gold = generate_synthetic(20, seed=42)
        assert a_records == b_records and a_gold == b_gold
        c_records, _ = generate_synthetic(20, seed=43)
        assert c_records != a_records

    def test_records_align_with_gold(self):
        records, gold = generate_synthetic(10, seed=3)
        assert len(records) == len(gold.descriptions)
        for record, desc in zip(records, gold.descriptions):
            assert record.id == desc.source_id
            assert record.description == desc.raw_text
            assert [t.text for t in tokenize(record.description)] == desc.texts()

    def test_perfect_recovery_without_distractors(self):
        records, gold = generate_synthetic(60, seed=8, distractor_rate=0.0)
        auto = autolabel_corpus(records, synthetic_gazetteer(), source_kind="synthetic")
        counts = compute_metrics(
            [d.domain_labels() for d in gold.descriptions],
            [d.domain_labels() for d in auto.descriptions],
            "domain",
        )
        assert counts.precision == 1.0 and counts.recall == 1.0
        iob_counts = compute_metrics(
            [d.iob_kinds() for d in gold.descriptions],
            [d.iob_kinds() for d in auto.descriptions],
            "iob",
        )
        assert iob_counts.precision == 1.0 and iob_counts.recall == 1.0

    def test_mean_length_in_range(self):
        _, gold = generate_synthetic(500, seed=1)
        mean = gold.token_count / len(gold.descriptions)
        assert 40 <= mean <= 60

    def test_distractors_are_plain_shaped(self):
        assert DISTRACTOR_PRODUCTS
        assert set(DISTRACTOR_PRODUCTS) <= set(PRODUCTS)

    def test_vocabularies_do_not_collide(self):
        # Relevant-term words must never appear as entity-name words, so a
        # gazetteer phrase can never overlap an entity mention by accident.
        term_words = {
            w
            for phrases in list(CWE_RELEVANT_TERMS.values()) + [SHARED_RELEVANT_TERMS]
            for phrase in phrases
            for w in phrase
        }
        name_words = {
            w.lower()
            for name in VENDORS + PRODUCTS + LANGUAGES
            for w in name.split()
        }
        assert term_words.isdisjoint(name_words)

    def test_gazetteer_matches_exactly_the_planted_phrases(self):
        # Every gazetteer hit on generated text must be gold relevant-term.
        records, gold = generate_synthetic(80, seed=13, distractor_rate=0.5)
        from vulntag.autolabel import match_gazetteer

        gazetteer = synthetic_gazetteer()
        for desc in gold.descriptions:
            tokens = [at.token for at in desc.tokens]
            for span in match_gazetteer(tokens, gazetteer):
                for i in range(span.start, span.end):
                    assert desc.tokens[i].iob.label is not None, desc.raw_text

    def test_monotone_f1_over_corpus_size(self):
        records, _ = generate_synthetic(1100, seed=77)
        corpus = autolabel_corpus(records, synthetic_gazetteer(), source_kind="synthetic")
        means = []
        for n in (100, 500, 1000):
            reports = cross_validate(corpus, n=n, folds=3, n_iter=3, seed=5)
            means.append(reports["domain"].mean_f1)
        assert means[1] >= means[0] - 0.02
        assert means[2] >= means[1] - 0.02
