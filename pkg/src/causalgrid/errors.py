"""Exception types shared across the package."""


class CausalGridError(Exception):
    """Base class for all package-specific errors."""


class CycleError(CausalGridError):
    """Adjacency matrix contains a directed cycle."""


class SizeError(CausalGridError):
    """Requested operation only supports smaller graphs."""


class MismatchError(CausalGridError):
    """Two states that should describe the same object set do not."""


class ShapeError(CausalGridError):
    """Dataset shape does not match the model or graph it is used with."""


class FormatError(CausalGridError):
    """Stored dataset has a bad magic string or unsupported version."""


class CorruptionError(CausalGridError):
    """Stored dataset fails internal length/shape consistency checks."""


class DecodeError(CausalGridError):
    """A rendered frame contains a cell matching no known shape/color."""


class InsufficientData(CausalGridError):
    """Not enough interventional evidence to complete a recovery task."""

    def __init__(self, message, missing_pairs=()):
        super().__init__(message)
        self.missing_pairs = tuple(missing_pairs)


class ConfigError(CausalGridError):
    """Invalid or incomplete configuration."""

    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field
