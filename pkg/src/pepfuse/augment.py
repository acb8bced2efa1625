"""Substitution-matrix-guided sequence augmentation.

A peptide is split into roughly equal segments; over M steps each segment
receives one of three strategies chosen by (segment index + step) mod 3:
conservative mutation (best-scoring different residue under BLOSUM62),
probabilistic insertion, or probabilistic deletion. Segments are re-spliced
in order. Test-time augmentation uses substitution-only variants so
position-aligned encodings stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import tables
from .errors import SequenceError
from .sequences import ALPHABET, Peptide


@dataclass(frozen=True)
class AugmentConfig:
    """Augmentation parameters. n_steps=0 yields the identity."""

    n_segments: int = 3
    n_steps: int = 2
    p_insert: float = 0.1
    p_delete: float = 0.1
    min_len_after: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_segments < 1:
            raise SequenceError("n_segments must be >= 1")
        if self.n_steps < 0:
            raise SequenceError("n_steps must be >= 0")
        for name in ("p_insert", "p_delete"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SequenceError(f"{name} must be in [0, 1]")
        if self.min_len_after < 1:
            raise SequenceError("min_len_after must be >= 1")


@lru_cache(maxsize=None)
def _second_best_map() -> dict[str, str]:
    scores = tables.blosum62()
    out = {}
    for i, a in enumerate(ALPHABET):
        best, best_score = None, None
        for j, b in enumerate(ALPHABET):
            if b == a:
                continue
            if best_score is None or scores[i, j] > best_score:
                best, best_score = b, scores[i, j]
        out[a] = best
    return out


def second_best(residue: str) -> str:
    """Highest-scoring substitution that differs from the input residue.

    Ties resolve to the alphabetically first candidate.
    """
    try:
        return _second_best_map()[residue]
    except KeyError:
        raise SequenceError(f"non-canonical residue {residue!r}") from None


def segment(p: Peptide, n: int, rng: np.random.Generator) -> list[str]:
    """Split into min(n, len) non-empty, order-preserving segments.

    Cut points sit within one position of uniform spacing; jitters that
    would break monotonicity or stretch the pairwise length bound are
    re-drawn, falling back to exact spacing.
    """
    if n < 1:
        raise SequenceError("segment: n must be >= 1")
    residues = p.residues
    length = len(residues)
    n_eff = min(n, length)
    if n_eff == 1:
        return [residues]
    base = [int(round(i * length / n_eff)) for i in range(1, n_eff)]
    bound = math.ceil(length / n_eff)

    def lengths(cuts):
        edges = [0] + cuts + [length]
        return [edges[i + 1] - edges[i] for i in range(n_eff)]

    cuts = base
    for _ in range(8):
        trial = [b + int(j) for b, j in
                 zip(base, rng.integers(-1, 2, size=n_eff - 1))]
        if trial[0] < 1 or trial[-1] > length - 1:
            continue
        if any(trial[i + 1] <= trial[i] for i in range(len(trial) - 1)):
            continue
        ls = lengths(trial)
        if max(ls) - min(ls) <= bound:
            cuts = trial
            break
    edges = [0] + cuts + [length]
    return [residues[edges[i]:edges[i + 1]] for i in range(n_eff)]


def _mutate(seg: str, rng: np.random.Generator) -> str:
    pos = int(rng.integers(0, len(seg)))
    return seg[:pos] + second_best(seg[pos]) + seg[pos + 1:]


def augment(p: Peptide, cfg: AugmentConfig,
            rng: np.random.Generator) -> Peptide:
    """One augmented variant of ``p``; deterministic given the rng state."""
    if len(p) < cfg.min_len_after:
        raise SequenceError(
            f"augment: peptide {p.id} shorter than min_len_after "
            f"({len(p)} < {cfg.min_len_after})")
    segs = segment(p, cfg.n_segments, rng)
    total = len(p)
    for step in range(1, cfg.n_steps + 1):
        for s in range(len(segs)):
            strategy = (s + step) % 3
            if strategy == 0:
                segs[s] = _mutate(segs[s], rng)
            elif strategy == 1:
                # skip growth past the record's length cap
                if total < p.max_len and rng.random() < cfg.p_insert:
                    pos = int(rng.integers(0, len(segs[s]) + 1))
                    ch = ALPHABET[int(rng.integers(0, 20))]
                    segs[s] = segs[s][:pos] + ch + segs[s][pos:]
                    total += 1
            else:
                if (len(segs[s]) > 1 and total > cfg.min_len_after
                        and rng.random() < cfg.p_delete):
                    pos = int(rng.integers(0, len(segs[s])))
                    segs[s] = segs[s][:pos] + segs[s][pos + 1:]
                    total -= 1
    return Peptide(p.id, "".join(segs), p.max_len)


def tta_batch(p: Peptide, n_aug: int,
              rng: np.random.Generator) -> list[Peptide]:
    """The peptide itself plus n_aug single-substitution variants."""
    if n_aug < 0:
        raise SequenceError("tta_batch: n_aug must be >= 0")
    out = [p]
    for _ in range(n_aug):
        pos = int(rng.integers(0, len(p)))
        residues = (p.residues[:pos] + second_best(p.residues[pos])
                    + p.residues[pos + 1:])
        out.append(Peptide(p.id, residues, p.max_len))
    return out
