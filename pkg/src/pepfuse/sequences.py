"""Peptide records, FASTA ingestion, and stratified splitting.

Every downstream stage assumes sequences drawn from the 20 canonical
residues; validation happens once, here, so encoders and the model can
trust their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FastaError, SequenceError

ALPHABET = "ACDEFGHIKLMNPQRSTVWY"
ALPHABET_SET = frozenset(ALPHABET)
RESIDUE_INDEX = {a: i for i, a in enumerate(ALPHABET)}
DEFAULT_MAX_LEN = 100


def validate_residues(residues: str, peptide_id: str = "?",
                      max_len: int = DEFAULT_MAX_LEN) -> None:
    """Raise SequenceError unless ``residues`` is canonical and in range."""
    if not residues:
        raise SequenceError(f"{peptide_id}: empty sequence")
    if len(residues) > max_len:
        raise SequenceError(
            f"{peptide_id}: length {len(residues)} exceeds maximum {max_len}")
    for pos, ch in enumerate(residues, start=1):
        if ch not in ALPHABET_SET:
            raise SequenceError(
                f"{peptide_id}: non-canonical residue {ch!r} at position {pos}")


@dataclass(frozen=True)
class Peptide:
    """One sequence record. ``residues`` is validated at construction."""

    id: str
    residues: str
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self):
        if not self.id or any(c.isspace() for c in self.id):
            raise SequenceError(f"invalid peptide id {self.id!r}")
        validate_residues(self.residues, self.id, self.max_len)

    def __len__(self) -> int:
        return len(self.residues)


@dataclass
class LabeledDataset:
    """Peptides with optional binary labels (1 = active class)."""

    records: list[tuple[Peptide, int | None]] = field(default_factory=list)
    task_name: str = ""

    def __post_init__(self):
        seen = set()
        for pep, label in self.records:
            if pep.id in seen:
                raise SequenceError(f"duplicate peptide id {pep.id!r}")
            seen.add(pep.id)
            if label is not None and label not in (0, 1):
                raise SequenceError(
                    f"{pep.id}: label must be 0 or 1, got {label!r}")

    def __len__(self) -> int:
        return len(self.records)

    def peptides(self) -> list[Peptide]:
        return [pep for pep, _ in self.records]

    def labels(self) -> list[int | None]:
        return [label for _, label in self.records]

    def require_labels(self) -> list[int]:
        out = []
        for pep, label in self.records:
            if label is None:
                raise SequenceError(f"{pep.id}: record is unlabeled")
            out.append(label)
        return out

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset([self.records[i] for i in indices],
                              task_name=self.task_name)

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for _, label in self.records:
            if label is not None:
                counts[label] = counts.get(label, 0) + 1
        return counts


def _parse_header(header: str, label_key: str) -> tuple[str, int | None]:
    parts = header.split("|")
    peptide_id = parts[0].strip()
    if not peptide_id:
        raise FastaError(f"header {header!r}: empty id")
    label = None
    for part in parts[1:]:
        part = part.strip()
        if not part or "=" not in part:
            continue
        key, _, value = part.partition("=")
        if key.strip() != label_key:
            continue
        value = value.strip()
        if value not in ("0", "1"):
            raise FastaError(
                f"header {header!r}: {label_key} must be 0 or 1, got {value!r}")
        label = int(value)
    return peptide_id, label


def parse_fasta(text: str, label_key: str = "label",
                max_len: int = DEFAULT_MAX_LEN,
                task_name: str = "") -> LabeledDataset:
    """Parse FASTA text into a dataset.

    Labels ride in the header as ``>id|label=0`` fields; records without
    the key stay unlabeled. Sequences may wrap over multiple lines.
    """
    records: list[tuple[Peptide, int | None]] = []
    header: str | None = None
    chunks: list[str] = []

    def flush():
        if header is None:
            return
        peptide_id, label = _parse_header(header, label_key)
        residues = "".join(chunks).upper()
        try:
            pep = Peptide(peptide_id, residues, max_len)
        except SequenceError as exc:
            raise FastaError(str(exc)) from exc
        records.append((pep, label))

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
                raise FastaError(f"sequence data before any header: {line!r}")
            chunks.append(line)
    flush()
    if not records:
        raise FastaError("no records found")
    ds = LabeledDataset(task_name=task_name)
    ds.records = records
    ds.__post_init__()
    return ds


def write_fasta(ds: LabeledDataset, label_key: str = "label") -> str:
    """Render a dataset back to FASTA; inverse of parse_fasta."""
    lines = []
    for pep, label in ds.records:
        header = f">{pep.id}"
        if label is not None:
            header += f"|{label_key}={label}"
        lines.append(header)
        lines.append(pep.residues)
    return "\n".join(lines) + "\n"


def parse_label_manifest(text: str) -> dict[str, int]:
    """Parse a two-column TSV (id, label) into a mapping."""
    mapping: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FastaError(f"label manifest line {lineno}: "
                             f"expected 2 tab-separated columns")
        peptide_id, value = parts[0].strip(), parts[1].strip()
        if value not in ("0", "1"):
            raise FastaError(f"label manifest line {lineno}: "
                             f"label must be 0 or 1, got {value!r}")
        if peptide_id in mapping:
            raise FastaError(f"label manifest line {lineno}: "
                             f"duplicate id {peptide_id!r}")
        mapping[peptide_id] = int(value)
    if not mapping:
        raise FastaError("label manifest is empty")
    return mapping


def apply_labels(ds: LabeledDataset, mapping: dict[str, int],
                 strict: bool = True) -> LabeledDataset:
    """Return a copy of ``ds`` with labels taken from ``mapping``."""
    records = []
    for pep, old in ds.records:
        if pep.id in mapping:
            records.append((pep, mapping[pep.id]))
        elif strict:
            raise FastaError(f"{pep.id}: no label in manifest")
        else:
            records.append((pep, old))
    return LabeledDataset(records, task_name=ds.task_name)


def split_train_test(ds: LabeledDataset, ratio: float,
                     seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic stratified split; ``ratio`` is the train fraction."""
    if not 0.0 < ratio < 1.0:
        raise SequenceError(f"split ratio must be in (0, 1), got {ratio}")
    labels = ds.require_labels()
    by_class: dict[int, list[int]] = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)
    for label, idxs in sorted(by_class.items()):
        if len(idxs) < 2:
            raise SequenceError(
                f"class {label} has {len(idxs)} member(s); "
                f"need at least 2 to stratify")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_class):
        idxs = np.array(by_class[label])
        rng.shuffle(idxs)
        n_train = int(round(ratio * len(idxs)))
        train_idx.extend(idxs[:n_train].tolist())
        test_idx.extend(idxs[n_train:].tolist())
    train_idx.sort()
    test_idx.sort()
    return ds.subset(train_idx), ds.subset(test_idx)
