"""Numerics for PII0, the squared equation XX and its regularisation XX'.

    s''  = 2 s^3 + t s                          (PII0)
    S''  = S'^2 / (2 S) + 4 S^2 + 2 t S         (XX)
    S''' = 12 S S' + 4 t S' + 2 S               (XX')
"""

from .errors import (
    BranchViolationError,
    BudgetExceededError,
    DegenerateZeroError,
    InconsistentDataError,
    InvalidStateError,
    NearSingularError,
    OracleInconsistencyError,
    PainleveError,
    RangeError,
    StepSizeUnderflowError,
    UsageError,
    WrongSignError,
)
from .integrator import (
    EventHit,
    EventSpec,
    ToleranceConfig,
    Trajectory,
    evaluate_dense,
    integrate,
    oracle_integrate,
    richardson_reference,
)
from .models import (
    Model,
    Pii0State,
    SeriesAtZero,
    XxPrimeState,
    XxState,
    invariant_c,
    lift_xx_to_xxprime,
    rhs_pii0,
    rhs_xx,
    rhs_xxprime,
    series_at_zero,
)
from .paths import DensePath, SampledPath
from .transforms import sqrt_negative, sqrt_positive, sqrt_signed, square_state, square_trajectory
from .verify import Case, VerificationReport, residual, run_suite
from .zero_analysis import (
    NoSignChangeReport,
    ZeroClass,
    ZeroEvent,
    check_no_sign_change,
    classify_zero,
    locate_zeros,
)

__version__ = "0.1.0"

__all__ = [
    "BranchViolationError",
    "BudgetExceededError",
    "Case",
    "DegenerateZeroError",
    "DensePath",
    "EventHit",
    "EventSpec",
    "InconsistentDataError",
    "InvalidStateError",
    "Model",
    "NearSingularError",
    "NoSignChangeReport",
    "OracleInconsistencyError",
    "PainleveError",
    "Pii0State",
    "RangeError",
    "SampledPath",
    "SeriesAtZero",
    "StepSizeUnderflowError",
    "ToleranceConfig",
    "Trajectory",
    "UsageError",
    "VerificationReport",
    "WrongSignError",
    "XxPrimeState",
    "XxState",
    "ZeroClass",
    "ZeroEvent",
    "check_no_sign_change",
    "classify_zero",
    "evaluate_dense",
    "integrate",
    "invariant_c",
    "lift_xx_to_xxprime",
    "locate_zeros",
    "oracle_integrate",
    "residual",
    "rhs_pii0",
    "rhs_xx",
    "rhs_xxprime",
    "richardson_reference",
    "run_suite",
    "series_at_zero",
    "sqrt_negative",
    "sqrt_positive",
    "sqrt_signed",
    "square_state",
    "square_trajectory",
]
