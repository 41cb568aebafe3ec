"""Exception hierarchy shared by the numerical modules and the CLI.

Each exception carries the process exit code the CLI reports for it.
"""
from typing import Any, Optional


class SonineError(Exception):
    """Base class for every error raised by the library."""

    exit_code: int = 1


class DomainError(SonineError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 4


class ConfigError(SonineError):
    """A run configuration could not be parsed or validated."""

    exit_code = 4


class AccuracyError(SonineError, ArithmeticError):
    """A tolerance, truncation bound or budget could not be met."""

    exit_code = 3

    def __init__(self, message: str, best: Optional[Any] = None):
        super().__init__(message)
        self.best = best


class QuadratureError(AccuracyError):
    """Adaptive quadrature ran out of panels before reaching its target."""


class DerivativeError(AccuracyError):
    """The Richardson table of a numerical derivative did not settle."""


class MaxIterExceeded(AccuracyError):
    """Picard iteration stopped at the iteration cap; `best` holds the last iterate."""


class HypothesisViolation(SonineError):
    """A hypothesis of the theorem behind an operation does not hold."""

    exit_code = 2


class ContractionViolated(HypothesisViolation):
    """The Picard map is not a contraction: c_f * sup(I^k 1) >= 1."""

    def __init__(self, constant: float):
        super().__init__(
            f"Contraction constant {constant:.6g} is not below 1; "
            "the fixed-point theorem does not apply and the solver refuses to iterate."
        )
        self.constant = constant


class RelationViolated(HypothesisViolation):
    """The composition kernel of two kernels is not finite on the sample grid."""


class NotConjugate(HypothesisViolation):
    """A kernel pair failed the conjugacy check it was supposed to pass."""

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report
