"""Exception hierarchy for the laboratory."""

from __future__ import annotations


class OULabError(Exception):
    """Base class for all library errors."""


class ArgumentError(OULabError, ValueError):
    """A caller-supplied argument is out of range or malformed."""


class InvalidOperatorError(OULabError, ValueError):
    """The (Q, A) pair violates the operator invariants."""


class PreconditionError(OULabError, ValueError):
    """A documented precondition of an operation does not hold."""


class EvaluationError(OULabError, ValueError):
    """A user-supplied function returned a non-finite value."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class UnsupportedEngineError(OULabError, ValueError):
    """The requested evaluation engine cannot handle this problem size."""


class NumericalFailureError(OULabError, RuntimeError):
    """A numerical routine failed; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RangeOverflowError(NumericalFailureError):
    """A result overflowed the floating-point range."""


class AmbiguousStructureError(NumericalFailureError):
    """No eigenvalue clustering produced a valid Jordan structure.

    ``candidates`` lists the clusterings that were tried, each as a
    (merge radius, unit summary) pair.
    """

    def __init__(self, message: str, candidates=None):
        super().__init__(message, {"candidates": candidates or []})
        self.candidates = candidates or []


class SpecFileError(OULabError, ValueError):
    """An operator or candidate file failed to parse or validate."""


class IllConditionedWarning(UserWarning):
    """A computation involved an inversion near the conditioning floor."""
