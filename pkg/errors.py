"""
Error Types for the Drift Spectrum Toolkit

Every module raises one of these so the command-line frontend can map a
failure to its exit code without inspecting messages.

Version: 1.0.0
"""

from typing import Optional


class DriftSpectrumError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class DomainError(DriftSpectrumError, ValueError):
    """An argument lies outside the domain of the requested operation."""

    exit_code = 2


class UsageError(DriftSpectrumError, ValueError):
    """Arguments are individually valid but inconsistent with each other."""

    exit_code = 2


class MaskParseError(UsageError):
    """A mask file does not follow the `nx ny x0 y0 h` + 0/1 rows format."""

    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class OverlapError(DriftSpectrumError, ValueError):
    """Balls of a family intersect where a disjoint union is required."""

    exit_code = 2


class DegenerateInputError(DriftSpectrumError, ValueError):
    """Input makes a quotient undefined (zero denominator, empty support)."""

    exit_code = 2


class InfeasibleTargetError(DomainError):
    """Eigenvalue target at or below the measured infimum of lambda1_ball."""

    def __init__(self, target: float, infimum: float) -> None:
        super().__init__(
            f"target eigenvalue {target:.10g} is not above the measured "
            f"infimum {infimum:.10g} of lambda1_ball"
        )
        self.target = target
        self.infimum = infimum


class NumericalError(DriftSpectrumError, RuntimeError):
    """A numerical method failed to deliver a result of the requested quality."""

    exit_code = 3


class ConvergenceError(NumericalError):
    """An iterative method ran out of budget before meeting its tolerance."""

    def __init__(self, message: str, best_residual: float = float("nan")) -> None:
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class ConsistencyError(NumericalError):
    """A computed quantity contradicts a structural property it must have."""


# Exceptions outside the taxonomy are reported like numerical failures
UNEXPECTED_ERROR_EXIT_CODE = 3


class VerificationFailure(DriftSpectrumError):
    """One or more verification suites reported a failed check."""

    exit_code = 4
