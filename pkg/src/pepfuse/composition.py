"""Residue-composition analytics: per-class frequencies, Welch t-tests,
and log2 fold changes.

The two-sided p-value comes from the t distribution through a
continued-fraction evaluation of the regularized incomplete beta
function, so the package needs no statistics dependency at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .sequences import ALPHABET, LabeledDataset, Peptide

FOLD_EPS = 1e-6
STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            return h
    raise ConfigError("incomplete beta did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ConfigError("incomplete beta needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ConfigError("incomplete beta needs x in [0, 1]")
    if x == 0.0 or x == 1.0:
        return float(x)
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided p-value of a t statistic with df degrees of freedom."""
    if df <= 0:
        raise ConfigError("degrees of freedom must be > 0")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def welch_t_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Welch's unequal-variance t statistic and two-sided p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ConfigError("welch_t_test: need >= 2 samples per side")
    na, nb = len(a), len(b)
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    se2 = va / na + vb / nb
    diff = a.mean() - b.mean()
    if se2 == 0.0:
        # identical constants on both sides, or a real offset with no spread
        return (0.0, 1.0) if diff == 0.0 else (math.inf, 0.0)
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return float(t), t_sf_two_sided(float(t), float(df))


def per_peptide_frequencies(peptides: list[Peptide]) -> np.ndarray:
    """Residue frequency rows, one per peptide, shape (n, 20)."""
    if not peptides:
        raise ConfigError("per_peptide_frequencies: empty input")
    idx = {c: i for i, c in enumerate(ALPHABET)}
    out = np.zeros((len(peptides), 20))
    for row, p in enumerate(peptides):
        for ch in p.residues:
            out[row, idx[ch]] += 1.0
        out[row] /= len(p)
    return out


def stars_for(p_value: float) -> str:
    for threshold, marker in STAR_LEVELS:
        if p_value < threshold:
            return marker
    return "ns"


@dataclass(frozen=True)
class CompositionReport:
    residues: tuple[str, ...]
    mean_a: np.ndarray
    mean_b: np.ndarray
    t_stat: np.ndarray
    p_value: np.ndarray
    log2_fold: np.ndarray
    stars: tuple[str, ...]


def composition_compare(ds_a: LabeledDataset | list[Peptide],
                        ds_b: LabeledDataset | list[Peptide]
                        ) -> CompositionReport:
    """Per-residue Welch comparison of two peptide collections."""
    peps_a = ds_a.peptides() if isinstance(ds_a, LabeledDataset) else ds_a
    peps_b = ds_b.peptides() if isinstance(ds_b, LabeledDataset) else ds_b
    freq_a = per_peptide_frequencies(peps_a)
    freq_b = per_peptide_frequencies(peps_b)
    if len(freq_a) < 2 or len(freq_b) < 2:
        raise ConfigError("composition_compare: need >= 2 peptides per side")
    mean_a = freq_a.mean(axis=0)
    mean_b = freq_b.mean(axis=0)
    t_stat = np.zeros(20)
    p_value = np.zeros(20)
    for i in range(20):
        t_stat[i], p_value[i] = welch_t_test(freq_a[:, i], freq_b[:, i])
    log2_fold = np.log2((mean_a + FOLD_EPS) / (mean_b + FOLD_EPS))
    return CompositionReport(
        residues=tuple(ALPHABET),
        mean_a=mean_a,
        mean_b=mean_b,
        t_stat=t_stat,
        p_value=p_value,
        log2_fold=log2_fold,
        stars=tuple(stars_for(p) for p in p_value),
    )


def fold_change_matrix(background: LabeledDataset | list[Peptide],
                       subsets: dict[str, LabeledDataset | list[Peptide]]
                       ) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Log2 fold change and p-value matrices, one row per subset."""
    if not subsets:
        raise ConfigError("fold_change_matrix: no subsets given")
    names = tuple(subsets)
    folds = np.zeros((len(names), 20))
    pvals = np.zeros((len(names), 20))
    for row, name in enumerate(names):
        report = composition_compare(subsets[name], background)
        folds[row] = report.log2_fold
        pvals[row] = report.p_value
    return names, folds, pvals
