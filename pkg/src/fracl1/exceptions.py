"""Exception types raised by :mod:`fracl1`."""


class Fracl1Error(Exception):
    """Base class for all package errors."""


class DomainError(Fracl1Error, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class InvalidParameterError(Fracl1Error, ValueError):
    """A constructor or routine received an inadmissible parameter."""


class IndexRangeError(Fracl1Error, IndexError):
    """A time-level or node index is out of range."""


class AdmissibilityError(Fracl1Error):
    """The discrete maximum principle condition on the spatial grid fails."""


class MeshError(Fracl1Error, ValueError):
    """A triangulation is malformed or fails to parse.

    ``line`` is the 1-based line number of the offending input, when known.
    """

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SolverError(Fracl1Error):
    """A linear solve failed to converge or broke down."""

    def __init__(self, message: str, level: int | None = None, stats=None) -> None:
        if level is not None:
            message = f"time level {level}: {message}"
        super().__init__(message)
        self.level = level
        self.stats = stats


class ConfigError(Fracl1Error, ValueError):
    """A study configuration is invalid; ``path`` names the offending field."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
