"""Metric tests against hand computations and an independent tally oracle."""

from __future__ import annotations

import numpy as np
import pytest

from corpusgcn import evaluate


def tally_oracle(pred, gold, n_labels):
    """Per-class precision/recall tally, written independently of evaluate."""
    pred = np.asarray(pred)
    gold = np.asarray(gold)
    accuracy = float(np.mean(pred == gold))
    f1 = {}
    support = {}
    predicted = {}
    for c in range(n_labels):
        tp = int(np.sum((pred == c) & (gold == c)))
        support[c] = int(np.sum(gold == c))
        predicted[c] = int(np.sum(pred == c))
        prec = tp / predicted[c] if predicted[c] else 0.0
        rec = tp / support[c] if support[c] else 0.0
        f1[c] = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    included = [c for c in range(n_labels) if support[c] > 0 or predicted[c] > 0]
    macro = sum(f1[c] for c in included) / len(included)
    total = sum(support.values())
    weighted = sum(f1[c] * support[c] for c in range(n_labels)) / total
    return accuracy, macro, weighted


class TestHandExamples:
    def test_all_correct(self):
        result = evaluate([0, 1, 2, 1], [0, 1, 2, 1], 3)
        assert result.accuracy == 1.0
        assert result.macro_f1 == 1.0
        assert result.weighted_f1 == 1.0

    def test_one_disagreement(self):
        result = evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2)
        assert result.accuracy == 0.75
        assert result.per_class_f1[0] == pytest.approx(2 / 3)
        assert result.per_class_f1[1] == pytest.approx(0.8)
        assert result.macro_f1 == pytest.approx(0.73333, abs=1e-4)
        assert result.weighted_f1 == pytest.approx(0.73333, abs=1e-4)

    def test_total_miss(self):
        result = evaluate([1, 1, 1], [0, 0, 0], 2)
        assert result.accuracy == 0.0
        assert result.macro_f1 == 0.0
        assert result.weighted_f1 == 0.0

    def test_confusion_layout(self):
        result = evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2)
        # rows gold, cols pred
        assert result.confusion.tolist() == [[1, 1], [0, 2]]
        assert result.accuracy == np.trace(result.confusion) / result.confusion.sum()


class TestConventions:
    def test_class_absent_everywhere_excluded_from_macro(self):
        # label 2 never occurs; macro averages over classes 0 and 1 only
        result = evaluate([0, 1], [0, 1], 3)
        assert 2 not in result.per_class_f1
        assert result.macro_f1 == 1.0

    def test_class_with_support_but_no_predictions_counts_zero(self):
        result = evaluate([0, 0, 0], [0, 0, 1], 2)
        assert result.per_class_f1[1] == 0.0
        assert result.macro_f1 == pytest.approx((0.8 + 0.0) / 2)

    def test_class_predicted_but_absent_from_gold_counts_zero(self):
        result = evaluate([0, 1], [0, 0], 2)
        assert result.per_class_f1[1] == 0.0
        assert 1 in result.per_class_f1

    def test_zero_division_resolves_to_zero(self):
        result = evaluate([1, 1], [0, 0], 2)
        assert result.per_class_f1[0] == 0.0
        assert result.per_class_f1[1] == 0.0

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 30))
            n_labels = int(rng.integers(2, 5))
            gold = rng.integers(0, n_labels, n)
            pred = rng.integers(0, n_labels, n)
            result = evaluate(pred, gold, n_labels)
            for value in (result.accuracy, result.macro_f1, result.weighted_f1):
                assert 0.0 <= value <= 1.0

    def test_as_dict_round_trips_through_json(self):
        import json

        result = evaluate([0, 1, 1], [0, 1, 0], 2)
        blob = json.loads(json.dumps(result.as_dict()))
        assert blob["accuracy"] == result.accuracy
        assert blob["confusion"] == result.confusion.tolist()


class TestProperties:
    def test_permutation_invariance(self):
        rng = np.random.default_rng(11)
        gold = rng.integers(0, 4, 40)
        pred = rng.integers(0, 4, 40)
        base = evaluate(pred, gold, 4)
        perm = rng.permutation(40)
        shuffled = evaluate(pred[perm], gold[perm], 4)
        assert shuffled.accuracy == base.accuracy
        assert shuffled.macro_f1 == base.macro_f1
        assert shuffled.weighted_f1 == base.weighted_f1
        assert np.array_equal(shuffled.confusion, base.confusion)

    def test_weighted_equals_macro_on_balanced_supports(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            gold = np.repeat(np.arange(3), 8)
            pred = rng.integers(0, 3, gold.size)
            result = evaluate(pred, gold, 3)
            # all classes have gold support, so macro includes exactly those
            assert result.weighted_f1 == pytest.approx(result.macro_f1, abs=1e-12)

    def test_matches_tally_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(1, 51))
            n_labels = int(rng.integers(2, 6))
            gold = rng.integers(0, n_labels, n)
            pred = rng.integers(0, n_labels, n)
            result = evaluate(pred, gold, n_labels)
            acc, macro, weighted = tally_oracle(pred, gold, n_labels)
            assert result.accuracy == pytest.approx(acc, abs=1e-12)
            assert result.macro_f1 == pytest.approx(macro, abs=1e-12)
            assert result.weighted_f1 == pytest.approx(weighted, abs=1e-12)


class TestValidation:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evaluate([0, 1], [0], 2)

    def test_empty_inputs(self):
        with pytest.raises(ValueError):
            evaluate([], [], 2)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            evaluate([0, 3], [0, 1], 2)
        with pytest.raises(ValueError):
            evaluate([0, -1], [0, 1], 2)

    def test_inferred_label_count(self):
        result = evaluate([0, 2], [0, 1])
        assert result.confusion.shape == (3, 3)
