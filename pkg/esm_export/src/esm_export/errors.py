"""Exception hierarchy; the CLI maps these to exit codes."""


class ExportError(Exception):
    """Base class for everything this package raises on purpose."""


class InputError(ExportError):
    """Bad FASTA content, invalid residues, or sequences over the
    model's context limit."""


class StoreMismatchError(ExportError):
    """Output store exists with a different embedding width."""


class ModelUnavailableError(ExportError):
    """The requested model backend could not be constructed."""
