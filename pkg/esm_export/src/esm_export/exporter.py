"""Export job orchestration: FASTA in, PEMB store out."""

from __future__ import annotations

import os
from dataclasses import dataclass

from .embedder import DEFAULT_MODEL, Embedder, make_embedder
from .errors import InputError, StoreMismatchError
from .fasta import read_fasta
from .pemb import read_header, write_store


@dataclass(frozen=True)
class ExportJob:
    fasta: str
    out: str
    model: str = DEFAULT_MODEL
    batch_size: int = 8
    device: str = "cpu"

    def __post_init__(self):
        if self.batch_size < 1:
            raise InputError("batch size must be >= 1")


@dataclass(frozen=True)
class ExportResult:
    out: str
    d_e: int
    record_count: int


def export(job: ExportJob, embedder: Embedder | None = None) -> ExportResult:
    """Run the job; ``embedder`` overrides the model-name resolution."""
    records = read_fasta(job.fasta)
    if embedder is None:
        embedder = make_embedder(job.model, device=job.device)

    too_long = [r.id for r in records if len(r.residues) > embedder.max_len]
    if too_long:
        raise InputError(
            f"sequences exceed the model context of {embedder.max_len} "
            f"residues: {', '.join(too_long[:5])}")
    if os.path.exists(job.out):
        existing = read_header(job.out)
        if existing.d_e != embedder.d_e:
            raise StoreMismatchError(
                f"{job.out} holds d_e={existing.d_e} embeddings but the "
                f"model emits d_e={embedder.d_e}")

    def rows():
        for lo in range(0, len(records), job.batch_size):
            batch = records[lo:lo + job.batch_size]
            matrices = embedder.embed_batch([r.residues for r in batch])
            yield from ((r.id, r.residues, m)
                        for r, m in zip(batch, matrices))

    count = write_store(job.out, embedder.d_e, rows())
    return ExportResult(out=job.out, d_e=embedder.d_e, record_count=count)
