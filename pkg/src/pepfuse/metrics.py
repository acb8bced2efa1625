"""Classification and ranking metrics.

Threshold metrics come from confusion counts; ranking metrics use the
rank (Mann-Whitney) formulation of AUROC and a non-interpolated AUPRC
sweep with tied scores processed as blocks. Zero denominators yield the
documented value 0 rather than an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ConfigError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion_from_scores(scores, labels,
                          threshold: float = 0.5) -> ConfusionCounts:
    """Count outcomes of thresholding positive-class scores."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ConfigError("scores and labels must be matching 1D arrays")
    if scores.size == 0:
        raise ConfigError("no samples to evaluate")
    if not np.all(np.isin(labels, (0, 1))):
        raise ConfigError("labels must be 0 or 1")
    pred = scores >= threshold
    pos = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        tn=int(np.sum(~pred & ~pos)),
        fp=int(np.sum(pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den != 0 else 0.0


def classification_metrics(c: ConfusionCounts) -> dict[str, float]:
    """acc, sn, sp, mcc, f1, gmean from counts; 0 on zero denominators."""
    if c.total == 0:
        raise ConfigError("classification_metrics: empty counts")
    tp, tn, fp, fn = float(c.tp), float(c.tn), float(c.fp), float(c.fn)
    acc = (tp + tn) / c.total
    sn = _ratio(tp, tp + fn)
    sp = _ratio(tn, tn + fp)
    denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = _ratio(tp * tn - fp * fn, denom)
    precision = _ratio(tp, tp + fp)
    f1 = _ratio(2 * precision * sn, precision + sn)
    return {
        "acc": acc,
        "sn": sn,
        "sp": sp,
        "mcc": mcc,
        "f1": f1,
        "gmean": math.sqrt(sn * sp),
    }


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """Probability a positive outranks a negative, ties counted half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ConfigError("auroc: need both classes present")
    ranks = _midranks(scores)
    rank_sum = ranks[labels == 1].sum()
    u_stat = rank_sum - n_pos * (n_pos + 1) / 2.0
    return float(u_stat / (n_pos * n_neg))


def auprc(scores, labels) -> float:
    """Non-interpolated area under precision-recall, descending sweep."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise ConfigError("auprc: need at least one positive")
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    area = 0.0
    tp = 0
    seen = 0
    recall_prev = 0.0
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        tp += int(np.sum(sorted_labels[i:j + 1] == 1))
        seen += j - i + 1
        precision = tp / seen
        recall = tp / n_pos
        area += (recall - recall_prev) * precision
        recall_prev = recall
        i = j + 1
    return float(area)


def evaluate_scores(scores, labels, threshold: float = 0.5
                    ) -> dict[str, float]:
    """All metrics from scores: threshold metrics plus AUROC/AUPRC."""
    out = classification_metrics(
        confusion_from_scores(scores, labels, threshold))
    out["auroc"] = auroc(scores, labels)
    out["auprc"] = auprc(scores, labels)
    return out
