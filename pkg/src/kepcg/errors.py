"""Exception hierarchy shared by every kepcg module."""


class KepError(Exception):
    """Base class for all errors raised by kepcg."""


class ValidationError(KepError):
    """An instance, exchange or dual vector violates a structural invariant."""


class ParseError(KepError):
    """A file could not be decoded; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ParameterError(KepError):
    """A parameter is outside its admissible range."""


class UnsupportedParameterError(ParameterError):
    """A parameter is valid in principle but not supported by this build."""


class SizeLimitError(KepError):
    """An exhaustive procedure would exceed its enumeration budget."""


class SolverError(KepError):
    """The LP solver failed numerically."""
