"""Exception taxonomy.

Every failure the library can diagnose maps to one of these classes so that
callers (the CLI in particular) can translate error kinds into exit codes
without string matching.  All constructors take a plain message string.
"""


class AirtranError(Exception):
    """Base class for all library errors."""


class MatrixFormatError(AirtranError):
    """Byte stream is not a matrix file: bad magic or malformed header."""


class MatrixVersionError(AirtranError):
    """Matrix file has an unsupported version or dtype code."""


class MatrixLengthError(AirtranError):
    """Matrix payload is truncated or has trailing bytes."""


class MatrixDataError(AirtranError):
    """Matrix payload contains NaN or infinity."""


class MatrixWriteError(AirtranError):
    """Matrix serialization failed while writing to the sink."""


class ManifestError(AirtranError):
    """Candidate manifest violates the line schema or grouping rules."""


class CapacityError(AirtranError):
    """Document pool too small for the requested candidate size."""


class ShapeError(AirtranError):
    """Operands have incompatible shapes or out-of-range indices."""


class DegenerateInputError(AirtranError):
    """Statistically degenerate input, e.g. fewer than two rows to whiten."""


class SingularGramError(AirtranError):
    """Normal equations are singular and no ridge term was requested."""


class NumericError(AirtranError):
    """A computation produced non-finite intermediates."""


class EmptyDatasetError(AirtranError):
    """Scoring was asked to run over a dataset with no candidate groups."""


class ConfigError(AirtranError):
    """Invalid configuration value."""
