"""Minimal FASTA reading for export jobs.

Record ids are the header text before the first ``|`` (annotation
fields such as labels ride after it and are ignored here). Sequences
may wrap over multiple lines and are uppercased.
"""

from dataclasses import dataclass

from .errors import InputError

ALPHABET = "ACDEFGHIKLMNPQRSTVWY"
_VALID = frozenset(ALPHABET)


@dataclass(frozen=True)
class FastaRecord:
    id: str
    residues: str


def parse_fasta(text: str) -> list[FastaRecord]:
    records: list[FastaRecord] = []
    header: str | None = None
    chunks: list[str] = []

    def flush():
        if header is None:
            return
        rid = header.split("|", 1)[0].strip()
        if not rid:
            raise InputError(f"header {header!r}: empty id")
        seq = "".join(chunks).upper()
        if not seq:
            raise InputError(f"{rid}: empty sequence")
        bad = sorted(set(seq) - _VALID)
        if bad:
            raise InputError(f"{rid}: non-canonical residues {bad}")
        records.append(FastaRecord(rid, seq))

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            header = line[1:].strip()
            chunks = []
        else:
            if header is None:
                raise InputError("sequence data before any FASTA header")
            chunks.append(line)
    flush()

    seen: set[str] = set()
    for rec in records:
        if rec.id in seen:
            raise InputError(f"duplicate id {rec.id!r}")
        seen.add(rec.id)
    if not records:
        raise InputError("no FASTA records found")
    return records


def read_fasta(path: str) -> list[FastaRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_fasta(fh.read())
