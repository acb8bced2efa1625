"""Composite training objective: queue-mined contrastive, focal, and
consistency terms.

The OHEM state keeps bounded FIFO queues of detached embeddings per class.
Hard negatives are drawn by weighted sampling (weight rising with cosine
similarity to the positive prototype); the contrastive term is an
InfoNCE-style ratio with a learnable temperature. Empty queues mean the
contrastive term is skipped for the step, never an error.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, stack_scalars
from .errors import ConfigError

EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Weights and shape parameters of the total objective."""

    lam_contrastive: float = 0.5
    lam_consistency: float = 0.2
    gamma: float = 2.0
    tau_init: float = 0.1
    tau_sample: float = 0.1
    k_hard: int = 8
    q_pos_capacity: int = 512
    q_neg_capacity: int = 512

    def __post_init__(self):
        if self.lam_contrastive < 0 or self.lam_consistency < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.tau_init <= 0 or self.tau_sample <= 0:
            raise ConfigError("temperatures must be > 0")
        if self.k_hard < 0:
            raise ConfigError("k_hard must be >= 0")
        if self.q_pos_capacity < 1 or self.q_neg_capacity < 1:
            raise ConfigError("queue capacities must be >= 1")


@dataclass
class OhemState:
    """Bounded FIFO queues of detached embeddings, one per class."""

    q_pos_capacity: int = 512
    q_neg_capacity: int = 512
    tau_sample: float = 0.1
    q_pos: deque = field(init=False)
    q_neg: deque = field(init=False)

    def __post_init__(self):
        self.q_pos = deque(maxlen=self.q_pos_capacity)
        self.q_neg = deque(maxlen=self.q_neg_capacity)


def update_queues(state: OhemState, embeddings: list[np.ndarray],
                  labels: list[int]) -> None:
    """Append detached copies; the deque bound evicts oldest-first."""
    if len(embeddings) != len(labels):
        raise ConfigError("update_queues: embeddings/labels length mismatch")
    for emb, label in zip(embeddings, labels):
        target = state.q_pos if label == 1 else state.q_neg
        target.append(np.array(emb, dtype=float, copy=True))


def positive_prototype(state: OhemState) -> np.ndarray:
    """Mean of the positive queue; caller must ensure it is non-empty."""
    if not state.q_pos:
        raise ConfigError("positive_prototype: empty positive queue")
    return np.mean(np.stack(list(state.q_pos)), axis=0)


def _np_cosine(x: np.ndarray, y: np.ndarray) -> float:
    denom = np.linalg.norm(x) * np.linalg.norm(y)
    if denom == 0.0:
        return -1.0
    return float(np.dot(x, y) / denom)


def mine_hard_negatives(state: OhemState, k: int,
                        rng: np.random.Generator) -> list[np.ndarray]:
    """Weighted draw of k negatives without replacement (k clamped).

    Sampling weight is proportional to exp(cosine(n, prototype)/tau_s);
    returns [] when either queue is empty or the prototype has zero norm.
    """
    if k <= 0 or not state.q_neg or not state.q_pos:
        return []
    proto = positive_prototype(state)
    if np.linalg.norm(proto) == 0.0:
        return []
    negatives = list(state.q_neg)
    difficulty = np.array([_np_cosine(n, proto) for n in negatives])
    logits = difficulty / state.tau_sample
    logits -= logits.max()
    weights = np.exp(logits)
    weights /= weights.sum()
    k_eff = min(k, len(negatives))
    chosen = rng.choice(len(negatives), size=k_eff, replace=False, p=weights)
    return [negatives[int(i)] for i in chosen]


def mining_difficulty(state: OhemState) -> np.ndarray:
    """Cosine of each queued negative against the positive prototype."""
    proto = positive_prototype(state)
    return np.array([_np_cosine(n, proto) for n in state.q_neg])


def cosine_sim(x: Tensor, y: Tensor) -> Tensor:
    """Differentiable cosine similarity of two 1D tensors."""
    nx = float(np.linalg.norm(x.data))
    ny = float(np.linalg.norm(y.data))
    if nx == 0.0 or ny == 0.0:
        raise ConfigError("cosine_sim: zero-norm vector")
    return (x @ y) / ((x @ x).sqrt() * (y @ y).sqrt())


def _logsumexp(scores: Tensor) -> Tensor:
    shift = float(scores.data.max())
    return ((scores - shift).exp().sum()).log() + shift


def contrastive_loss(anchors: list[Tensor], positives: list[Tensor],
                     negatives_per_anchor: list[list],
                     tau) -> Tensor:
    """InfoNCE-style ratio over (anchor, positive, mined negatives).

    ``tau`` may be a float or a scalar Tensor (learnable temperature).
    Negatives are constants (queue history); gradient flows into anchors,
    positives, and tau.
    """
    n_anchors = len(anchors)
    if n_anchors == 0:
        raise ConfigError("contrastive_loss: need at least one anchor")
    if not (len(positives) == len(negatives_per_anchor) == n_anchors):
        raise ConfigError("contrastive_loss: ragged inputs")
    if isinstance(tau, Tensor):
        if float(tau.data) <= 0:
            raise ConfigError("contrastive_loss: tau must be > 0")
    elif tau <= 0:
        raise ConfigError("contrastive_loss: tau must be > 0")
    terms = []
    for anchor, pos, negs in zip(anchors, positives, negatives_per_anchor):
        s_pos = cosine_sim(anchor, pos) / tau
        if not negs:
            terms.append(s_pos * 0.0)
            continue
        sims = [s_pos]
        for neg in negs:
            neg_t = neg if isinstance(neg, Tensor) else Tensor(neg)
            sims.append(cosine_sim(anchor, neg_t) / tau)
        terms.append(_logsumexp(stack_scalars(sims)) - s_pos)
    return stack_scalars(terms).sum() * (1.0 / n_anchors)


def focal_loss(probs: list[Tensor], labels: list[int], gamma: float,
               alpha: np.ndarray) -> Tensor:
    """Mean focal term -alpha_y (1-p_y)^gamma log(p_y)."""
    if len(probs) != len(labels) or not probs:
        raise ConfigError("focal_loss: need matching non-empty inputs")
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ConfigError("focal_loss: alpha components must be > 0")
    terms = []
    for p, y in zip(probs, labels):
        if not 0 <= y < p.shape[0]:
            raise ConfigError(f"focal_loss: label {y} out of range")
        p_y = p[y].clip(EPS, 1.0 - EPS)
        term = p_y.log() * (-float(alpha[y]))
        if gamma != 0.0:
            term = term * (1.0 - p_y) ** gamma
        terms.append(term)
    return stack_scalars(terms).sum() * (1.0 / len(terms))


def consistency_loss(p: Tensor, q: Tensor) -> Tensor:
    """Symmetric KL of two distributions (clipped, renormalized)."""
    if p.shape != q.shape:
        raise ConfigError("consistency_loss: shape mismatch")
    pc = p.clip(EPS, 1.0 - EPS)
    qc = q.clip(EPS, 1.0 - EPS)
    pn = pc / pc.sum()
    qn = qc / qc.sum()
    log_ratio = pn.log() - qn.log()
    kl_pq = (pn * log_ratio).sum()
    kl_qp = (qn * (qn.log() - pn.log())).sum()
    return (kl_pq + kl_qp) * 0.5


def inverse_frequency_alpha(labels: list[int], n_classes: int) -> np.ndarray:
    """Per-class weights proportional to inverse frequency, mean 1."""
    counts = np.bincount(np.asarray(labels), minlength=n_classes).astype(float)
    if np.any(counts == 0):
        raise ConfigError("inverse_frequency_alpha: a class has no samples")
    inv = 1.0 / counts
    return inv * (n_classes / inv.sum())


def total_loss(l_contrastive, l_classification, l_consistency,
               weights: LossWeights) -> Tensor:
    """Weighted sum: lam1 * contrastive + classification + lam2 * consistency."""
    def as_tensor(v):
        return v if isinstance(v, Tensor) else Tensor(float(v))
    return (as_tensor(l_contrastive) * weights.lam_contrastive
            + as_tensor(l_classification)
            + as_tensor(l_consistency) * weights.lam_consistency)
