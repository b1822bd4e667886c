"""Exception types shared across the pipeline."""


class LddosError(Exception):
    """Base class for all errors raised by this package."""


# -- capture parsing ---------------------------------------------------------

class UnknownMagic(LddosError):
    """Stream does not start with a recognised capture-file magic number."""


class TruncatedHeader(LddosError):
    """Capture global header shorter than 24 octets."""


class TruncatedRecord(LddosError):
    """A record header promises more octets than the stream holds."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MalformedFrame(LddosError):
    """Frame header lengths inconsistent with the captured bytes."""


# -- synthesis ---------------------------------------------------------------

class InvalidProfile(LddosError):
    """Traffic profile fields violate the profile contract."""


# -- datasets ----------------------------------------------------------------

class SchemaMismatch(LddosError):
    """Feature schemas disagree between sources or model and input."""

    def __init__(self, message: str, columns=()):
        if columns:
            message = f"{message}: {sorted(columns)}"
        super().__init__(message)
        self.columns = tuple(columns)


class RaggedRow(LddosError):
    """CSV row whose value count disagrees with the header."""

    def __init__(self, line_number: int, expected: int, got: int):
        super().__init__(
            f"line {line_number}: expected {expected} values, got {got}"
        )
        self.line_number = line_number


class NonNumeric(LddosError):
    """CSV cell that cannot be parsed as a number."""

    def __init__(self, line_number: int, column: str, value: str):
        super().__init__(f"line {line_number}, column {column!r}: {value!r}")
        self.line_number = line_number
        self.column = column


class ClassTooSmall(LddosError):
    """A label class has too few rows for the requested stratification."""


# -- classifiers -------------------------------------------------------------

class SingleClass(LddosError):
    """Training data contains only one label class."""


class NonFiniteInput(LddosError):
    """Training or prediction input contains NaN or infinity."""


class InvalidHyperparameter(LddosError):
    """Hyperparameter value outside its valid range."""


class DegenerateWeights(LddosError):
    """All estimator weights are zero (constant dataset)."""


class LengthMismatch(LddosError):
    """Two sequences that must align have different lengths."""


class VersionMismatch(LddosError):
    """Serialized model written by an incompatible format version."""


class CorruptModel(LddosError):
    """Serialized model text is unreadable or incomplete."""
