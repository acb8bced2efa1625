"""Exception types shared across the package."""


class PepfuseError(Exception):
    """Base class for all package errors."""


class SequenceError(PepfuseError, ValueError):
    """A residue string or peptide record is invalid."""


class FastaError(PepfuseError, ValueError):
    """A FASTA or label-manifest document cannot be parsed."""


class ConfigError(PepfuseError, ValueError):
    """A configuration key, value, or combination is invalid."""


class StoreError(PepfuseError, ValueError):
    """An embedding store file is malformed.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class MissingEmbeddingError(PepfuseError, KeyError):
    """A peptide id has no record in the embedding store."""


class DigestMismatchError(PepfuseError, ValueError):
    """A stored embedding does not belong to the query sequence."""


class CheckpointError(PepfuseError, ValueError):
    """A checkpoint file is malformed or incompatible."""


class NonFiniteError(PepfuseError, FloatingPointError):
    """A numeric operation produced NaN or infinity."""

    def __init__(self, where: str):
        super().__init__(f"non-finite values produced by {where}")
        self.where = where
