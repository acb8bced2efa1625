"""Metric tests: hand confusion values, rank-statistic oracles, tie handling."""

import math

import numpy as np
import pytest

from pepfuse.errors import ConfigError
from pepfuse.metrics import (ConfusionCounts, auprc, auroc,
                             classification_metrics, confusion_from_scores,
                             evaluate_scores)


def oracle_auroc(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = sum(float(p > n) + 0.5 * float(p == n)
               for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def oracle_confusion(scores, labels, threshold):
    tp = tn = fp = fn = 0
    for s, y in zip(scores, labels):
        pred = s >= threshold
        if pred and y == 1:
            tp += 1
        elif pred and y == 0:
            fp += 1
        elif not pred and y == 1:
            fn += 1
        else:
            tn += 1
    return tp, tn, fp, fn


def test_hand_confusion_metrics():
    m = classification_metrics(ConfusionCounts(tp=90, fn=10, tn=80, fp=20))
    assert m["acc"] == pytest.approx(0.85)
    assert m["sn"] == pytest.approx(0.9)
    assert m["sp"] == pytest.approx(0.8)
    assert m["mcc"] == pytest.approx(0.70353, abs=1e-5)
    assert m["mcc"] == pytest.approx(
        7000.0 / math.sqrt(110 * 100 * 100 * 90))
    assert m["gmean"] == pytest.approx(math.sqrt(0.72))
    assert m["f1"] == pytest.approx(2 * (90 / 110) * 0.9
                                    / (90 / 110 + 0.9))


def test_perfect_and_degenerate_confusions():
    perfect = classification_metrics(ConfusionCounts(tp=5, tn=5))
    for key in ("acc", "sn", "sp", "mcc", "f1", "gmean"):
        assert perfect[key] == 1.0
    all_pos_pred = classification_metrics(ConfusionCounts(tp=5, fp=5))
    assert all_pos_pred["sp"] == 0.0
    assert all_pos_pred["mcc"] == 0.0
    no_pos = classification_metrics(ConfusionCounts(tn=4, fp=1))
    assert no_pos["sn"] == 0.0 and no_pos["f1"] == 0.0
    with pytest.raises(ConfigError):
        classification_metrics(ConfusionCounts())
    with pytest.raises(ConfigError):
        ConfusionCounts(tp=-1)


def test_confusion_from_scores_matches_recount():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(1, 40))
        scores = np.round(rng.random(n), 1)
        labels = rng.integers(0, 2, size=n)
        threshold = float(rng.choice([0.3, 0.5, 0.7]))
        c = confusion_from_scores(scores, labels, threshold)
        assert (c.tp, c.tn, c.fp, c.fn) == oracle_confusion(
            scores, labels, threshold)


def test_confusion_from_scores_validation():
    with pytest.raises(ConfigError):
        confusion_from_scores([0.5], [1, 0])
    with pytest.raises(ConfigError):
        confusion_from_scores([], [])
    with pytest.raises(ConfigError):
        confusion_from_scores([0.5], [2])


def test_auroc_matches_pair_counting_oracle_exactly():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        # quantized scores to force ties
        scores = rng.integers(0, 10, size=n) / 10.0
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert auroc(scores, labels) == oracle_auroc(scores, labels)


def test_auroc_examples():
    assert auroc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auroc([0.8, 0.2, 0.6, 0.4], [1, 1, 0, 0]) == 0.5
    assert auroc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5
    assert auroc([0.1, 0.2, 0.8], [1, 0, 0]) == 0.0


def test_auroc_monotone_transform_invariant_and_inversion():
    rng = np.random.default_rng(2)
    scores = rng.random(30)  # continuous, ties negligible
    labels = rng.integers(0, 2, size=30)
    labels[0], labels[1] = 0, 1
    base = auroc(scores, labels)
    assert auroc(3.0 * scores + 1.0, labels) == base
    assert auroc(np.exp(scores), labels) == base
    assert auroc(scores, 1 - labels) == pytest.approx(1.0 - base, abs=1e-12)


def test_auroc_requires_both_classes():
    with pytest.raises(ConfigError):
        auroc([0.5, 0.6], [1, 1])


def test_auprc_examples():
    assert auprc([0.9, 0.3, 0.7], [1, 1, 0]) == pytest.approx(5.0 / 6.0)
    assert auprc([0.9, 0.8, 0.2], [1, 1, 0]) == 1.0
    # all-equal scores collapse to one block with precision = prevalence
    assert auprc([0.4] * 5, [1, 0, 0, 1, 0]) == pytest.approx(2.0 / 5.0)
    with pytest.raises(ConfigError):
        auprc([0.5], [0])


def test_auprc_tie_grouping_consistent():
    # ties must be swept as one block, not in arbitrary within-tie order
    scores = [0.9, 0.5, 0.5, 0.1]
    a = auprc(scores, [1, 0, 1, 0])
    b = auprc(scores, [1, 1, 0, 0])
    assert a == pytest.approx(b)


def test_evaluate_scores_combines_everything():
    scores = [0.9, 0.7, 0.4, 0.2]
    labels = [1, 0, 1, 0]
    out = evaluate_scores(scores, labels, threshold=0.5)
    assert set(out) == {"acc", "sn", "sp", "mcc", "f1", "gmean",
                        "auroc", "auprc"}
    assert out["acc"] == pytest.approx(0.5)
    assert out["auroc"] == oracle_auroc(np.array(scores), np.array(labels))
    perfect = evaluate_scores([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])
    assert all(v == 1.0 for v in perfect.values())
