"""Ten sequence descriptors and their fixed-order concatenation.

Every encoder is a pure function Peptide -> FeatureVector. Dimensions are
length-independent for a fixed config (unreachable gap/distance blocks are
zero-filled) so batches stack into rectangular matrices.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import tables
from .errors import SequenceError
from .sequences import ALPHABET, Peptide

# Physicochemical groups, in fixed order (index = position in this tuple).
GROUPS = (
    ("aliphatic", "GAVLMI"),
    ("aromatic", "FYW"),
    ("positive", "KRH"),
    ("negative", "DE"),
    ("uncharged", "STCPNQ"),
)
GROUP_NAMES = tuple(name for name, _ in GROUPS)
_GROUP_OF = {}
for _gi, (_, _members) in enumerate(GROUPS):
    for _ch in _members:
        _GROUP_OF[_ch] = _gi

# Standard codon multiplicities per residue (61 sense codons total).
CODON_COUNTS = {
    "A": 4, "C": 2, "D": 2, "E": 2, "F": 2, "G": 4, "H": 2, "I": 3,
    "K": 2, "L": 6, "M": 1, "N": 2, "P": 4, "Q": 2, "R": 6, "S": 6,
    "T": 4, "V": 4, "W": 1, "Y": 2,
}

_RES_IDX = {a: i for i, a in enumerate(ALPHABET)}
_GROUP_IDX = np.array([_GROUP_OF[a] for a in ALPHABET])
_CODONS = np.array([CODON_COUNTS[a] for a in ALPHABET], dtype=float)


@dataclass(frozen=True)
class DescriptorConfig:
    """Parameters for the configurable encoders."""

    cksaagp_max_gap: int = 3
    distancepair_max_distance: int = 2
    paac_lambda: int = 2
    paac_weight: float = 0.05
    qso_nlag: int = 2
    qso_weight: float = 0.1
    binary_pad_len: int = 100

    def __post_init__(self):
        if self.cksaagp_max_gap < 0:
            raise SequenceError("cksaagp_max_gap must be >= 0")
        if self.distancepair_max_distance < 1:
            raise SequenceError("distancepair_max_distance must be >= 1")
        if self.paac_lambda < 1:
            raise SequenceError("paac_lambda must be >= 1")
        if self.paac_weight <= 0:
            raise SequenceError("paac_weight must be > 0")
        if self.qso_nlag < 1:
            raise SequenceError("qso_nlag must be >= 1")
        if self.qso_weight <= 0:
            raise SequenceError("qso_weight must be > 0")
        if self.binary_pad_len < 1:
            raise SequenceError("binary_pad_len must be >= 1")


@dataclass(frozen=True)
class FeatureVector:
    """A named, finite feature block."""

    values: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self):
        if self.values.ndim != 1 or len(self.values) != len(self.schema):
            raise SequenceError(
                f"feature vector has {len(self.values)} values "
                f"but {len(self.schema)} schema entries")
        if not np.all(np.isfinite(self.values)):
            raise SequenceError("feature vector contains non-finite values")


def _indices(p: Peptide) -> np.ndarray:
    return np.fromiter((_RES_IDX[c] for c in p.residues), dtype=np.int64,
                       count=len(p.residues))


def _require(p: Peptide, min_len: int, name: str) -> None:
    if len(p) < min_len:
        raise SequenceError(
            f"{name}: peptide {p.id} has length {len(p)}, needs >= {min_len}")


@lru_cache(maxsize=None)
def _pair_schema(prefix: str) -> tuple[str, ...]:
    return tuple(f"{prefix}{a}{b}" for a in ALPHABET for b in ALPHABET)


@lru_cache(maxsize=None)
def _aac_schema(prefix: str = "aac:") -> tuple[str, ...]:
    return tuple(f"{prefix}{a}" for a in ALPHABET)


def aac(p: Peptide) -> FeatureVector:
    """Single-residue composition; sums to 1."""
    idx = _indices(p)
    vals = np.bincount(idx, minlength=20).astype(float) / len(p)
    return FeatureVector(vals, _aac_schema())


def dpc(p: Peptide) -> FeatureVector:
    """Adjacent-pair composition; sums to 1."""
    _require(p, 2, "dpc")
    idx = _indices(p)
    pair = idx[:-1] * 20 + idx[1:]
    vals = np.bincount(pair, minlength=400).astype(float) / (len(p) - 1)
    return FeatureVector(vals, _pair_schema("dpc:"))


def dde(p: Peptide) -> FeatureVector:
    """Dipeptide deviation from codon-derived expectation."""
    _require(p, 2, "dde")
    idx = _indices(p)
    pair = idx[:-1] * 20 + idx[1:]
    dc = np.bincount(pair, minlength=400).astype(float) / (len(p) - 1)
    tm = np.outer(_CODONS / 61.0, _CODONS / 61.0).ravel()
    tv = tm * (1.0 - tm) / (len(p) - 1)
    vals = (dc - tm) / np.sqrt(tv)
    return FeatureVector(vals, _pair_schema("dde:"))


@lru_cache(maxsize=None)
def _cksaagp_schema(k: int) -> tuple[str, ...]:
    return tuple(f"cksaagp:g{g}:{a}-{b}"
                 for g in range(k + 1)
                 for a in GROUP_NAMES for b in GROUP_NAMES)


def cksaagp(p: Peptide, k: int = 3) -> FeatureVector:
    """Group-pair composition at gaps 0..k; unreachable gaps are zero."""
    _require(p, 2, "cksaagp")
    if k < 0:
        raise SequenceError("cksaagp: max gap must be >= 0")
    gidx = _GROUP_IDX[_indices(p)]
    blocks = []
    for g in range(k + 1):
        n_pairs = len(p) - g - 1
        if n_pairs <= 0:
            blocks.append(np.zeros(25))
            continue
        pair = gidx[:n_pairs] * 5 + gidx[g + 1:]
        blocks.append(np.bincount(pair, minlength=25).astype(float) / n_pairs)
    return FeatureVector(np.concatenate(blocks), _cksaagp_schema(k))


@lru_cache(maxsize=None)
def _gtpc_schema() -> tuple[str, ...]:
    return tuple(f"gtpc:{a}-{b}-{c}"
                 for a in GROUP_NAMES for b in GROUP_NAMES
                 for c in GROUP_NAMES)


def gtpc(p: Peptide) -> FeatureVector:
    """Group tripeptide composition; sums to 1."""
    _require(p, 3, "gtpc")
    gidx = _GROUP_IDX[_indices(p)]
    triple = gidx[:-2] * 25 + gidx[1:-1] * 5 + gidx[2:]
    vals = np.bincount(triple, minlength=125).astype(float) / (len(p) - 2)
    return FeatureVector(vals, _gtpc_schema())


@lru_cache(maxsize=None)
def _theta_matrix() -> np.ndarray:
    """Mean squared property difference per residue pair, shape (20, 20)."""
    props = tables.paac_properties_standardized()
    diff = props[:, :, None] - props[:, None, :]
    return (diff ** 2).mean(axis=0)


@lru_cache(maxsize=None)
def _paac_schema(lam: int) -> tuple[str, ...]:
    return _aac_schema("paac:") + tuple(
        f"paac:theta{j}" for j in range(1, lam + 1))


def paac(p: Peptide, lam: int = 2, weight: float = 0.05) -> FeatureVector:
    """Pseudo amino-acid composition with lam order-correlation factors."""
    if lam < 1 or weight <= 0:
        raise SequenceError("paac: need lam >= 1 and weight > 0")
    if len(p) <= lam:
        raise SequenceError(
            f"paac: peptide {p.id} has length {len(p)}, needs > {lam}")
    idx = _indices(p)
    theta_tbl = _theta_matrix()
    freqs = np.bincount(idx, minlength=20).astype(float) / len(p)
    thetas = np.array([theta_tbl[idx[:-j], idx[j:]].mean()
                       for j in range(1, lam + 1)])
    denom = freqs.sum() + weight * thetas.sum()
    vals = np.concatenate([freqs, weight * thetas]) / denom
    return FeatureVector(vals, _paac_schema(lam))


@lru_cache(maxsize=None)
def _qso_schema(nlag: int) -> tuple[str, ...]:
    return _aac_schema("qso:") + tuple(
        f"qso:tau{d}" for d in range(1, nlag + 1))


def qsorder(p: Peptide, nlag: int = 2, weight: float = 0.1,
            distance_matrix: np.ndarray | None = None) -> FeatureVector:
    """Quasi-sequence-order descriptor over a residue distance matrix."""
    if nlag < 1 or weight <= 0:
        raise SequenceError("qsorder: need nlag >= 1 and weight > 0")
    if len(p) <= nlag:
        raise SequenceError(
            f"qsorder: peptide {p.id} has length {len(p)}, needs > {nlag}")
    dist = (tables.sequence_distance_matrix()
            if distance_matrix is None else distance_matrix)
    idx = _indices(p)
    sq = dist ** 2
    freqs = np.bincount(idx, minlength=20).astype(float) / len(p)
    taus = np.array([sq[idx[:-d], idx[d:]].sum()
                     for d in range(1, nlag + 1)])
    denom = freqs.sum() + weight * taus.sum()
    vals = np.concatenate([freqs, weight * taus]) / denom
    return FeatureVector(vals, _qso_schema(nlag))


def zscale(p: Peptide) -> FeatureVector:
    """Mean of the five z-scale values over the sequence."""
    idx = _indices(p)
    vals = tables.zscales()[idx].mean(axis=0)
    return FeatureVector(vals, tuple(f"zscale:z{i}" for i in range(1, 6)))


@lru_cache(maxsize=None)
def _dpair_schema(max_d: int) -> tuple[str, ...]:
    names = list(_aac_schema("dpair:aac:"))
    for d in range(1, max_d + 1):
        names.extend(_pair_schema(f"dpair:d{d}:"))
    return tuple(names)


def distance_pair(p: Peptide, max_d: int = 2) -> FeatureVector:
    """Composition plus ordered-pair composition at distances 1..max_d."""
    _require(p, 2, "distance_pair")
    if max_d < 1:
        raise SequenceError("distance_pair: max distance must be >= 1")
    idx = _indices(p)
    blocks = [np.bincount(idx, minlength=20).astype(float) / len(p)]
    for d in range(1, max_d + 1):
        n_pairs = len(p) - d
        if n_pairs <= 0:
            blocks.append(np.zeros(400))
            continue
        pair = idx[:n_pairs] * 20 + idx[d:]
        blocks.append(np.bincount(pair, minlength=400).astype(float) / n_pairs)
    return FeatureVector(np.concatenate(blocks), _dpair_schema(max_d))


@lru_cache(maxsize=None)
def _binary_schema(pad_len: int) -> tuple[str, ...]:
    return tuple(f"binary:p{i}:{a}" for i in range(pad_len) for a in ALPHABET)


def binary(p: Peptide, pad_len: int = 100) -> FeatureVector:
    """Per-position one-hot rows, zero-padded to pad_len positions."""
    if len(p) > pad_len:
        raise SequenceError(
            f"binary: peptide {p.id} has length {len(p)}, exceeds pad {pad_len}")
    idx = _indices(p)
    mat = np.zeros((pad_len, 20))
    mat[np.arange(len(p)), idx] = 1.0
    return FeatureVector(mat.ravel(), _binary_schema(pad_len))


def encode_all(p: Peptide, cfg: DescriptorConfig = DescriptorConfig(),
               distance_matrix: np.ndarray | None = None) -> FeatureVector:
    """Concatenate all ten descriptors in fixed order."""
    parts = (
        ("aac", lambda: aac(p)),
        ("dpc", lambda: dpc(p)),
        ("cksaagp", lambda: cksaagp(p, cfg.cksaagp_max_gap)),
        ("distance_pair",
         lambda: distance_pair(p, cfg.distancepair_max_distance)),
        ("paac", lambda: paac(p, cfg.paac_lambda, cfg.paac_weight)),
        ("qsorder", lambda: qsorder(p, cfg.qso_nlag, cfg.qso_weight,
                                    distance_matrix)),
        ("zscale", lambda: zscale(p)),
        ("gtpc", lambda: gtpc(p)),
        ("binary", lambda: binary(p, cfg.binary_pad_len)),
        ("dde", lambda: dde(p)),
    )
    values = []
    schema: list[str] = []
    for name, fn in parts:
        try:
            fv = fn()
        except SequenceError as exc:
            raise SequenceError(f"encode_all[{name}]: {exc}") from exc
        values.append(fv.values)
        schema.extend(fv.schema)
    return FeatureVector(np.concatenate(values), tuple(schema))


def encode_dim(cfg: DescriptorConfig) -> int:
    """Total encode_all dimension for a config."""
    return (20 + 400 + 25 * (cfg.cksaagp_max_gap + 1)
            + 20 + 400 * cfg.distancepair_max_distance
            + 20 + cfg.paac_lambda + 20 + cfg.qso_nlag + 5 + 125
            + 20 * cfg.binary_pad_len + 400)


def encode_dataset(peptides: list[Peptide],
                   cfg: DescriptorConfig = DescriptorConfig(),
                   threads: int = 1) -> tuple[np.ndarray, tuple[str, ...]]:
    """Encode a batch into a (n, dim) matrix plus the shared schema."""
    if not peptides:
        raise SequenceError("encode_dataset: empty peptide list")
    if threads > 1 and len(peptides) >= 64:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vecs = list(pool.map(lambda q: encode_all(q, cfg), peptides))
    else:
        vecs = [encode_all(q, cfg) for q in peptides]
    return np.stack([v.values for v in vecs]), vecs[0].schema
