"""Exception taxonomy.

Every failure the exporter can diagnose maps to one of these classes so the
CLI can translate error kinds into exit codes without string matching.
"""


class ExportError(Exception):
    """Base class for all exporter errors."""


class InvalidJobError(ExportError):
    """An ExportJob field violates its invariant (empty texts, bad role, ...)."""


class ModelLoadError(ExportError):
    """The model or its tokenizer could not be loaded."""


class BatchMemoryError(ExportError):
    """A batch exceeded available memory; the message advises a smaller batch."""


class PairSchemaError(ExportError):
    """A manifest pair violates the line schema (types, label range, sign)."""
