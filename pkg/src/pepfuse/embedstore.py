"""File-backed per-residue embedding store plus a hash-based substitute.

Binary layout (all integers little-endian):

    magic "PEMB" | u16 version=1 | u32 d_e | u64 record_count
    per record: u16 id_len | id bytes (utf-8) | 32-byte sha256 of the
    residue string | u32 L | L*d_e little-endian float32

The digest binds a record to its exact sequence, so a lookup for an
augmented (changed) peptide fails loudly and the caller can fall back to
hash embeddings. The hash provider derives one row per residue identity
from a seeded generator: identical residues share rows, so augmentation
perturbs embeddings only at changed positions.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DigestMismatchError, MissingEmbeddingError, StoreError
from .sequences import ALPHABET, Peptide

MAGIC = b"PEMB"
VERSION = 1


def sequence_digest(residues: str) -> bytes:
    return hashlib.sha256(residues.encode("utf-8")).digest()


def write_store(path: str, d_e: int,
                records: list[tuple[str, str, np.ndarray]]) -> None:
    """Write (id, residues, L x d_e matrix) records; float32 payload."""
    if d_e < 1:
        raise StoreError("d_e must be >= 1")
    seen: set[str] = set()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HIQ", VERSION, d_e, len(records)))
        for peptide_id, residues, matrix in records:
            if peptide_id in seen:
                raise StoreError(f"duplicate id {peptide_id!r}")
            seen.add(peptide_id)
            matrix = np.asarray(matrix, dtype="<f4")
            if matrix.ndim != 2 or matrix.shape != (len(residues), d_e):
                raise StoreError(
                    f"record {peptide_id!r}: matrix shape {matrix.shape} "
                    f"does not match (len={len(residues)}, d_e={d_e})")
            encoded = peptide_id.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise StoreError(f"record {peptide_id!r}: id too long")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(sequence_digest(residues))
            fh.write(struct.pack("<I", matrix.shape[0]))
            fh.write(matrix.tobytes(order="C"))


@dataclass
class StoreRecord:
    peptide_id: str
    digest: bytes
    length: int
    offset: int  # byte offset of the float payload


class Store:
    """Read-only view over a PEMB file; payloads are read per lookup."""

    def __init__(self, path: str):
        self.path = path
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 18:
            raise StoreError("file too short for a header", offset=0)
        if blob[:4] != MAGIC:
            raise StoreError(f"bad magic {blob[:4]!r}", offset=0)
        version, d_e, count = struct.unpack_from("<HIQ", blob, 4)
        if version != VERSION:
            raise StoreError(f"unsupported version {version}", offset=4)
        if d_e < 1:
            raise StoreError(f"invalid d_e {d_e}", offset=6)
        self.d_e = int(d_e)
        self.records: list[StoreRecord] = []
        self._index: dict[str, StoreRecord] = {}
        pos = 18
        for i in range(count):
            if pos + 2 > len(blob):
                raise StoreError(f"truncated id length in record {i}",
                                 offset=pos)
            (id_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            if pos + id_len + 32 + 4 > len(blob):
                raise StoreError(f"truncated record {i}", offset=pos)
            peptide_id = blob[pos:pos + id_len].decode("utf-8")
            pos += id_len
            digest = blob[pos:pos + 32]
            pos += 32
            (length,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            payload = length * self.d_e * 4
            if pos + payload > len(blob):
                raise StoreError(
                    f"truncated payload in record {peptide_id!r}", offset=pos)
            record = StoreRecord(peptide_id, digest, int(length), pos)
            if peptide_id in self._index:
                raise StoreError(f"duplicate id {peptide_id!r}", offset=pos)
            self.records.append(record)
            self._index[peptide_id] = record
            pos += payload
        if pos != len(blob):
            raise StoreError(f"{len(blob) - pos} trailing bytes", offset=pos)
        self._blob = blob

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, peptide_id: str) -> bool:
        return peptide_id in self._index

    def matrix(self, record: StoreRecord) -> np.ndarray:
        raw = np.frombuffer(
            self._blob, dtype="<f4", count=record.length * self.d_e,
            offset=record.offset)
        return raw.reshape(record.length, self.d_e).astype(np.float64)

    def lookup(self, p: Peptide) -> np.ndarray:
        record = self._index.get(p.id)
        if record is None:
            raise MissingEmbeddingError(p.id)
        if record.digest != sequence_digest(p.residues):
            raise DigestMismatchError(
                f"{p.id}: stored digest does not match the query sequence")
        if record.length != len(p):
            raise StoreError(f"{p.id}: stored length {record.length} "
                             f"!= sequence length {len(p)}")
        return self.matrix(record)


def open_store(path: str) -> Store:
    return Store(path)


@lru_cache(maxsize=None)
def _residue_rows(d_e: int, seed: int) -> dict[str, np.ndarray]:
    rows = {}
    for residue in ALPHABET:
        rng = np.random.default_rng([seed, ord(residue)])
        rows[residue] = rng.standard_normal(d_e)
    return rows


def hash_embed(p: Peptide, d_e: int, seed: int = 0) -> np.ndarray:
    """Deterministic residue-keyed pseudo-embedding, shape (L, d_e)."""
    if d_e < 1:
        raise StoreError("hash_embed: d_e must be >= 1")
    rows = _residue_rows(d_e, seed)
    return np.stack([rows[ch] for ch in p.residues])


class HashEmbeddingProvider:
    """Provider over hash_embed with fixed width and seed."""

    def __init__(self, d_e: int, seed: int = 0):
        if d_e < 1:
            raise StoreError("embedding width must be >= 1")
        self.d_e = d_e
        self.seed = seed

    def get(self, p: Peptide) -> np.ndarray:
        return hash_embed(p, self.d_e, self.seed)

    def describe(self) -> str:
        return f"hash(d_e={self.d_e}, seed={self.seed})"


class StoreEmbeddingProvider:
    """Provider over a store, optionally falling back to hash embeddings
    for sequences the store does not cover (augmented variants)."""

    def __init__(self, store: Store,
                 fallback: HashEmbeddingProvider | None = None):
        self.store = store
        self.d_e = store.d_e
        if fallback is not None and fallback.d_e != store.d_e:
            raise StoreError(
                f"fallback width {fallback.d_e} != store width {store.d_e}")
        self.fallback = fallback

    def get(self, p: Peptide) -> np.ndarray:
        try:
            return self.store.lookup(p)
        except (MissingEmbeddingError, DigestMismatchError):
            if self.fallback is None:
                raise
            return self.fallback.get(p)

    def describe(self) -> str:
        tail = f"+{self.fallback.describe()}" if self.fallback else ""
        return f"store({self.store.path}, d_e={self.d_e}){tail}"
