"""PEMB store writing (and enough reading for round-trip checks).

Binary layout (all integers little-endian):

    magic "PEMB" | u16 version=1 | u32 d_e | u64 record_count
    per record: u16 id_len | id bytes (utf-8) | 32-byte sha256 of the
    residue string | u32 L | L*d_e little-endian float32

This is the on-disk contract shared with downstream consumers; the
digest binds each record to its exact sequence.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ExportError, StoreMismatchError

MAGIC = b"PEMB"
VERSION = 1
HEADER = struct.Struct("<HIQ")


def sequence_digest(residues: str) -> bytes:
    return hashlib.sha256(residues.encode("utf-8")).digest()


def write_store(path: str, d_e: int,
                records: Iterable[tuple[str, str, np.ndarray]]) -> int:
    """Write (id, residues, L x d_e matrix) records; returns the count."""
    if d_e < 1:
        raise ExportError("d_e must be >= 1")
    count = 0
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        header_pos = fh.tell()
        fh.write(HEADER.pack(VERSION, d_e, 0))
        for rec_id, residues, matrix in records:
            matrix = np.ascontiguousarray(matrix, dtype="<f4")
            if matrix.shape != (len(residues), d_e):
                raise ExportError(
                    f"record {rec_id!r}: matrix shape {matrix.shape} does "
                    f"not match (len={len(residues)}, d_e={d_e})")
            encoded = rec_id.encode("utf-8")
            if not encoded or len(encoded) > 0xFFFF:
                raise ExportError(f"record {rec_id!r}: bad id length")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(sequence_digest(residues))
            fh.write(struct.pack("<I", matrix.shape[0]))
            fh.write(matrix.tobytes(order="C"))
            count += 1
        fh.seek(header_pos)
        fh.write(HEADER.pack(VERSION, d_e, count))
    return count


@dataclass(frozen=True)
class StoreHeader:
    version: int
    d_e: int
    record_count: int


def read_header(path: str) -> StoreHeader:
    with open(path, "rb") as fh:
        blob = fh.read(len(MAGIC) + HEADER.size)
    if len(blob) < len(MAGIC) + HEADER.size or blob[:4] != MAGIC:
        raise StoreMismatchError(f"{path}: not a PEMB store")
    version, d_e, count = HEADER.unpack(blob[4:])
    if version != VERSION:
        raise StoreMismatchError(
            f"{path}: unsupported store version {version}")
    return StoreHeader(version, d_e, count)


def read_records(path: str) -> list[tuple[str, bytes, np.ndarray]]:
    """Full parse into (id, digest, matrix) triples, for verification."""
    header = read_header(path)
    out: list[tuple[str, bytes, np.ndarray]] = []
    with open(path, "rb") as fh:
        fh.seek(len(MAGIC) + HEADER.size)
        for _ in range(header.record_count):
            (id_len,) = struct.unpack("<H", _exact(fh, 2, path))
            rec_id = _exact(fh, id_len, path).decode("utf-8")
            digest = _exact(fh, 32, path)
            (length,) = struct.unpack("<I", _exact(fh, 4, path))
            payload = _exact(fh, length * header.d_e * 4, path)
            matrix = np.frombuffer(payload, dtype="<f4").reshape(
                length, header.d_e)
            out.append((rec_id, digest, matrix))
    return out


def _exact(fh, n: int, path: str) -> bytes:
    blob = fh.read(n)
    if len(blob) != n:
        raise ExportError(f"{path}: truncated store")
    return blob
