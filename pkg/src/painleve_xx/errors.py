"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures to its stable exit status table without a lookup of its own.
"""

from __future__ import annotations


class PainleveError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(PainleveError, ValueError):
    exit_code = 2


class InvalidStateError(PainleveError, ValueError):
    """A state carries NaN or infinite components."""

    exit_code = 2


class InconsistentDataError(PainleveError, ValueError):
    """XX data with S = 0 but nonzero first derivative."""

    exit_code = 2


class DegenerateZeroError(PainleveError, ValueError):
    """S = S' = S'' = 0 at a point: the data of the identically zero solution."""

    exit_code = 2


class NearSingularError(PainleveError, ArithmeticError):
    """The first-order form of XX was evaluated too close to S = 0."""

    exit_code = 3


class StepSizeUnderflowError(PainleveError, ArithmeticError):
    """Adaptive step fell below ``h_min``; usually a finite-time blow-up.

    The trajectory accepted so far is attached as ``partial``.
    """

    exit_code = 4

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class BudgetExceededError(PainleveError, RuntimeError):
    exit_code = 4

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class BranchViolationError(PainleveError, ValueError):
    """A square-root branch was requested where its sign condition fails.

    ``t`` names the first offending time.
    """

    exit_code = 5

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class WrongSignError(BranchViolationError):
    """Signed root requested at a zero with non-positive second derivative."""


class RangeError(PainleveError, ValueError):
    """Dense evaluation requested outside the integrated span."""

    exit_code = 2


class OracleInconsistencyError(PainleveError, RuntimeError):
    """Richardson extrapolations at successive step halvings disagree."""
