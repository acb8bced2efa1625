"""Versioned binary checkpoint container.

Layout (integers little-endian):

    magic "PFCK" | u16 version=1 | 32-byte sha256 of the config text |
    u32 config length | config utf-8 | u32 epoch | f64 best_metric |
    u8 stage (0 pretrain, 1 finetune) | u32 record count
    per record: u16 name length | name utf-8 | u8 dtype (0 f64, 1 f32,
    2 i64) | u8 rank | rank * u32 extents | little-endian payload

Record order is preserved, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError

MAGIC = b"PFCK"
VERSION = 1
STAGES = ("pretrain", "finetune")
_DTYPES = {0: "<f8", 1: "<f4", 2: "<i8"}
_DTYPE_TAGS = {np.dtype("float64"): 0, np.dtype("float32"): 1,
               np.dtype("int64"): 2}


@dataclass
class Checkpoint:
    """Everything needed to rebuild a model and resume-quality state."""

    config_text: str
    epoch: int
    best_metric: float
    stage: str
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise CheckpointError(f"unknown stage {self.stage!r}")

    def params(self, prefix: str = "param/") -> dict[str, np.ndarray]:
        return {name[len(prefix):]: arr
                for name, arr in self.tensors.items()
                if name.startswith(prefix)}


def save(ckpt: Checkpoint, path: str) -> None:
    config_bytes = ckpt.config_text.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(hashlib.sha256(config_bytes).digest())
        fh.write(struct.pack("<I", len(config_bytes)))
        fh.write(config_bytes)
        fh.write(struct.pack("<IdB", ckpt.epoch, ckpt.best_metric,
                             STAGES.index(ckpt.stage)))
        fh.write(struct.pack("<I", len(ckpt.tensors)))
        for name, arr in ckpt.tensors.items():
            arr = np.asarray(arr)
            tag = _DTYPE_TAGS.get(arr.dtype)
            if tag is None:
                arr = arr.astype(np.float64)
                tag = 0
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BB", tag, arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[tag]).tobytes())


def load(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise CheckpointError(f"bad magic in {path}")
    pos = 4
    (version,) = struct.unpack_from("<H", blob, pos)
    pos += 2
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    digest = blob[pos:pos + 32]
    pos += 32
    (config_len,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    config_bytes = blob[pos:pos + config_len]
    pos += config_len
    if hashlib.sha256(config_bytes).digest() != digest:
        raise CheckpointError("config digest mismatch (corrupted file)")
    epoch, best_metric, stage_tag = struct.unpack_from("<IdB", blob, pos)
    pos += struct.calcsize("<IdB")
    if stage_tag >= len(STAGES):
        raise CheckpointError(f"unknown stage tag {stage_tag}")
    (n_records,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    tensors: dict[str, np.ndarray] = {}
    for i in range(n_records):
        try:
            (name_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            name = blob[pos:pos + name_len].decode("utf-8")
            pos += name_len
            dtype_tag, rank = struct.unpack_from("<BB", blob, pos)
            pos += 2
            shape = struct.unpack_from(f"<{rank}I", blob, pos)
            pos += 4 * rank
            dtype = _DTYPES.get(dtype_tag)
            if dtype is None:
                raise CheckpointError(
                    f"record {name!r}: unknown dtype tag {dtype_tag}")
            count = int(np.prod(shape)) if rank else 1
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=pos)
            pos += count * np.dtype(dtype).itemsize
            tensors[name] = arr.reshape(shape).copy()
        except (struct.error, ValueError) as exc:
            raise CheckpointError(
                f"truncated checkpoint at record {i} (byte {pos})") from exc
    if pos != len(blob):
        raise CheckpointError(f"{len(blob) - pos} trailing bytes")
    return Checkpoint(
        config_text=config_bytes.decode("utf-8"),
        epoch=int(epoch),
        best_metric=float(best_metric),
        stage=STAGES[stage_tag],
        tensors=tensors,
    )
