"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class BregmiError(Exception):
    """Base class for all package errors."""


class DegenerateSample(BregmiError, ValueError):
    """Sample too small or with zero spread to define a bandwidth."""


class OneGroupEmpty(BregmiError, ValueError):
    """One of the two label groups has no observations."""


class LimitCase(BregmiError, ValueError):
    """Generator requested on the A = 0 or B = 0 manifold."""


class GridMismatch(BregmiError, ValueError):
    """Two density grids do not share the same support points."""


class DegenerateVariance(BregmiError, ValueError):
    """Null variance estimate is not strictly positive."""


class PolicyDomain(BregmiError, ValueError):
    """Delta realization does not fit inside the integration grid."""


class ParseError(BregmiError, ValueError):
    """Malformed input row; ``line`` holds the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(BregmiError, ValueError):
    """Input file lacks the expected columns."""
