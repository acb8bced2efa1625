"""Report figures rendered alongside delimited outputs.

All functions take plain arrays plus an output path, render with the Agg
backend, and return the path written. They are kept free of CLI concerns
so library users can call them directly.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .composition import CompositionReport
from .metrics import auprc, auroc
from .sequences import ALPHABET

__all__ = [
    "training_curves",
    "score_histogram",
    "gate_histogram",
    "attention_profile",
    "roc_pr_curves",
    "composition_bars",
    "fold_change_heatmap",
]


def _save(fig, path: str) -> str:
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def training_curves(history: list[dict], path: str) -> str:
    """Loss components, pair similarities, and validation metric by epoch."""
    epochs = [row["epoch"] for row in history]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for key, label in (
        ("loss_total", "total"),
        ("loss_contrastive", "contrastive"),
        ("loss_classification", "classification"),
        ("loss_consistency", "consistency"),
    ):
        ax1.plot(epochs, [row[key] for row in history], label=label)
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss")
    ax1.legend(fontsize=8)
    ax1.set_title("training losses")

    ax2.plot(epochs, [row["pos_pair_sim"] for row in history],
             label="positive pair sim")
    ax2.plot(epochs, [row["hard_neg_sim"] for row in history],
             label="hard negative sim")
    ax2.plot(epochs, [row["val_mcc"] for row in history],
             label="val MCC", linestyle="--")
    ax2.set_xlabel("epoch")
    ax2.set_ylim(-1.05, 1.05)
    ax2.legend(fontsize=8)
    ax2.set_title("embedding pull/push and validation")
    return _save(fig, path)


def score_histogram(scores: np.ndarray, path: str) -> str:
    """Distribution of predicted positive-class probabilities."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(np.asarray(scores, dtype=float), bins=20, range=(0.0, 1.0),
            color="#4878cf", edgecolor="white")
    ax.set_xlabel("P(positive)")
    ax.set_ylabel("count")
    ax.set_title("prediction scores")
    return _save(fig, path)


def gate_histogram(gates: np.ndarray, path: str) -> str:
    """Distribution of the fusion gate; 1 favors the CNN branch."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(np.asarray(gates, dtype=float), bins=20, range=(0.0, 1.0),
            color="#6acc65", edgecolor="white")
    ax.axvline(0.5, color="grey", linestyle=":")
    ax.set_xlabel("gate value")
    ax.set_ylabel("count")
    ax.set_title("branch fusion gates")
    return _save(fig, path)


def attention_profile(residues: str, attn_cnn: np.ndarray,
                      attn_bilstm: np.ndarray, path: str,
                      title: str = "") -> str:
    """Per-position attention for both branches of one peptide."""
    n = len(residues)
    pos = np.arange(1, n + 1)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * n), 3.2))
    width = 0.4
    ax.bar(pos - width / 2, np.asarray(attn_cnn, dtype=float), width,
           label="CNN", color="#4878cf")
    ax.bar(pos + width / 2, np.asarray(attn_bilstm, dtype=float), width,
           label="BiLSTM", color="#d65f5f")
    ax.set_xticks(pos)
    ax.set_xticklabels(list(residues))
    ax.set_xlabel("residue")
    ax.set_ylabel("attention weight")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def roc_pr_curves(scores: np.ndarray, labels: np.ndarray, path: str) -> str:
    """ROC and precision-recall curves with their areas in the titles."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    order = np.argsort(-scores, kind="mergesort")
    y = labels[order]
    tps = np.cumsum(y)
    fps = np.cumsum(1 - y)
    n_pos = int(labels.sum())
    n_neg = int(len(labels) - n_pos)
    tpr = np.concatenate(([0.0], tps / max(n_pos, 1)))
    fpr = np.concatenate(([0.0], fps / max(n_neg, 1)))
    recall = tps / max(n_pos, 1)
    precision = tps / np.maximum(tps + fps, 1)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(fpr, tpr, color="#4878cf")
    ax1.plot([0, 1], [0, 1], color="grey", linestyle=":")
    ax1.set_xlabel("false positive rate")
    ax1.set_ylabel("true positive rate")
    ax1.set_title(f"ROC (AUROC={auroc(scores, labels):.4f})")

    ax2.plot(recall, precision, color="#d65f5f")
    ax2.set_xlabel("recall")
    ax2.set_ylabel("precision")
    ax2.set_ylim(0.0, 1.05)
    ax2.set_title(f"PR (AUPRC={auprc(scores, labels):.4f})")
    return _save(fig, path)


def composition_bars(report: CompositionReport, path: str,
                     label_a: str = "A", label_b: str = "B") -> str:
    """Mean residue frequencies of both groups with significance stars."""
    pos = np.arange(len(ALPHABET))
    width = 0.4
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.bar(pos - width / 2, report.mean_a, width, label=label_a,
           color="#4878cf")
    ax.bar(pos + width / 2, report.mean_b, width, label=label_b,
           color="#d65f5f")
    top = np.maximum(report.mean_a, report.mean_b)
    for i, stars in enumerate(report.stars):
        if stars != "ns":
            ax.text(pos[i], top[i] + 0.002, stars, ha="center", fontsize=7)
    ax.set_xticks(pos)
    ax.set_xticklabels(list(ALPHABET))
    ax.set_ylabel("mean frequency")
    ax.legend(fontsize=8)
    ax.set_title("residue composition")
    return _save(fig, path)


def fold_change_heatmap(names: list[str], folds: np.ndarray, path: str) -> str:
    """Subset-by-residue log2 fold-change matrix against the background."""
    folds = np.asarray(folds, dtype=float)
    fig, ax = plt.subplots(figsize=(10, max(2.5, 0.4 * len(names))))
    limit = max(float(np.abs(folds).max()), 1e-6)
    im = ax.imshow(folds, aspect="auto", cmap="RdBu_r",
                   vmin=-limit, vmax=limit)
    ax.set_xticks(np.arange(len(ALPHABET)))
    ax.set_xticklabels(list(ALPHABET))
    ax.set_yticks(np.arange(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    fig.colorbar(im, ax=ax, label="log2 fold change")
    ax.set_title("composition fold change vs background")
    return _save(fig, path)
