"""Bundled residue tables: substitution scores, property scales, distances.

Files live under ``pepfuse/data``; each load verifies a pinned sha256 so a
corrupted install fails loudly rather than skewing every feature downstream.
The sequence-order distance matrix is configuration: callers may pass an
alternative TSV with the same layout wherever a matrix is consumed.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import ConfigError
from .sequences import ALPHABET

_CHECKSUMS = {
    "blosum62.tsv":
        "4eaf87f5536a4c1abccda769e4222c8a722d542faa2b5471f3658c3905559f3b",
    "zscale.tsv":
        "e730cbbd371cd3d97a166a40dbaf842ca1f66215fe5bf702f96b01199d425a06",
    "paac_properties.tsv":
        "080d839a73d61281f28f430873778d33f2cd6371af43cb03153f7e81452c38b0",
    "residue_distance.tsv":
        "65bc9c2673428cd21bb8b5fbd00aff56746dbaf153dba12700f94a9c1de85575",
}


def _read_bundled(name: str) -> str:
    text = resources.files("pepfuse.data").joinpath(name).read_text()
    digest = hashlib.sha256(text.encode()).hexdigest()
    expected = _CHECKSUMS[name]
    if digest != expected:
        raise ConfigError(f"bundled table {name} is corrupted: "
                          f"sha256 {digest} != {expected}")
    return text


def _parse_square(text: str, name: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split("\t")
    if header[1:] != list(ALPHABET):
        raise ConfigError(f"{name}: column header must list {ALPHABET}")
    if len(lines) != 21:
        raise ConfigError(f"{name}: expected 20 rows, got {len(lines) - 1}")
    mat = np.zeros((20, 20))
    for i, line in enumerate(lines[1:]):
        parts = line.split("\t")
        if parts[0] != ALPHABET[i]:
            raise ConfigError(f"{name}: row {i} must start with {ALPHABET[i]}")
        if len(parts) != 21:
            raise ConfigError(f"{name}: row {parts[0]} has {len(parts) - 1} "
                              f"values, expected 20")
        mat[i] = [float(v) for v in parts[1:]]
    return mat


def _parse_columns(text: str, name: str, n_cols: int) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 21:
        raise ConfigError(f"{name}: expected 20 rows, got {len(lines) - 1}")
    mat = np.zeros((20, n_cols))
    for i, line in enumerate(lines[1:]):
        parts = line.split("\t")
        if parts[0] != ALPHABET[i]:
            raise ConfigError(f"{name}: row {i} must start with {ALPHABET[i]}")
        if len(parts) != n_cols + 1:
            raise ConfigError(f"{name}: row {parts[0]} has {len(parts) - 1} "
                              f"values, expected {n_cols}")
        mat[i] = [float(v) for v in parts[1:]]
    return mat


@lru_cache(maxsize=None)
def blosum62() -> np.ndarray:
    """BLOSUM62 scores as a (20, 20) int-valued array in alphabet order."""
    return _parse_square(_read_bundled("blosum62.tsv"), "blosum62")


@lru_cache(maxsize=None)
def zscales() -> np.ndarray:
    """Five z-scale descriptors per residue, shape (20, 5)."""
    return _parse_columns(_read_bundled("zscale.tsv"), "zscale", 5)


@lru_cache(maxsize=None)
def paac_properties() -> np.ndarray:
    """Raw hydrophobicity, hydrophilicity, side-chain mass; shape (3, 20)."""
    return _parse_columns(
        _read_bundled("paac_properties.tsv"), "paac_properties", 3).T


@lru_cache(maxsize=None)
def paac_properties_standardized() -> np.ndarray:
    """Property scales standardized to zero mean, unit variance over the 20
    residues (population variance), shape (3, 20)."""
    raw = paac_properties()
    mean = raw.mean(axis=1, keepdims=True)
    std = raw.std(axis=1, keepdims=True)
    return (raw - mean) / std


def load_distance_matrix(text: str, name: str = "distance") -> np.ndarray:
    """Parse and validate a sequence-order distance matrix from TSV text."""
    mat = _parse_square(text, name)
    if np.any(np.abs(np.diag(mat)) > 1e-12):
        raise ConfigError(f"{name}: diagonal must be zero")
    if np.any(mat < 0):
        raise ConfigError(f"{name}: distances must be non-negative")
    return mat


@lru_cache(maxsize=None)
def sequence_distance_matrix() -> np.ndarray:
    """Bundled physicochemical residue distance matrix, shape (20, 20).

    Derived from the three standardized property scales (Euclidean,
    scaled to a unit maximum); zero diagonal, symmetric.
    """
    return load_distance_matrix(
        _read_bundled("residue_distance.tsv"), "residue_distance")


def table_checksums() -> dict[str, str]:
    return dict(_CHECKSUMS)


def dump_tables() -> dict[str, str]:
    """Return the raw text of every bundled table, keyed by file name."""
    return {name: _read_bundled(name) for name in _CHECKSUMS}
