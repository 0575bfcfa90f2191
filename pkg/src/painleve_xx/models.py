"""Right-hand sides of PII0, XX and XX', the XX -> XX' lift, and local series.

Equations, with a dot for d/dt::

    PII0:  s''  = 2 s^3 + t s
    XX:    S''  = S'^2 / (2 S) + 4 S^2 + 2 t S
    XX':   S''' = 12 S S' + 4 t S' + 2 S

XX is singular on S = 0.  XX' has a polynomial right side and is the form
used to integrate through zeros; a solution of XX' is a solution of XX
exactly when the conserved quantity returned by :func:`invariant_c` is zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateZeroError,
    InconsistentDataError,
    InvalidStateError,
    NearSingularError,
    UsageError,
)

DEFAULT_ETA = 1e-12
MAX_SERIES_ORDER = 12


class Model(str, enum.Enum):
    PII0 = "pii0"
    XX = "xx"
    XXPRIME = "xxprime"
    # sampled paths only: sigma'' = t sigma - 2 sigma^3
    SIGMA = "sigma"

    @classmethod
    def parse(cls, value) -> "Model":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UsageError(f"unknown model {value!r}") from None

    @property
    def dim(self) -> int:
        return 3 if self is Model.XXPRIME else 2

    @property
    def columns(self) -> tuple[str, ...]:
        return _COLUMNS[self]

    @property
    def is_xx_type(self) -> bool:
        return self in (Model.XX, Model.XXPRIME)


_COLUMNS = {
    Model.PII0: ("s", "s_dot"),
    Model.XX: ("S", "S_dot"),
    Model.XXPRIME: ("S", "S_dot", "S_ddot"),
    Model.SIGMA: ("sigma", "sigma_dot"),
}


def _check_finite(name, values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidStateError(f"{name} has non-finite component: {values}")


@dataclass(frozen=True)
class Pii0State:
    t: float
    s: float
    s_dot: float

    def __post_init__(self):
        _check_finite("Pii0State", (self.t, self.s, self.s_dot))

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.s_dot])


@dataclass(frozen=True)
class XxState:
    t: float
    S: float
    S_dot: float

    def __post_init__(self):
        _check_finite("XxState", (self.t, self.S, self.S_dot))

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.S_dot])


@dataclass(frozen=True)
class XxPrimeState:
    t: float
    S: float
    S_dot: float
    S_ddot: float

    def __post_init__(self):
        _check_finite("XxPrimeState", (self.t, self.S, self.S_dot, self.S_ddot))

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.S_dot, self.S_ddot])


_STATE_TYPES = {
    Model.PII0: Pii0State,
    Model.XX: XxState,
    Model.XXPRIME: XxPrimeState,
}


def state_type(model: Model):
    return _STATE_TYPES[Model.parse(model)]


def make_state(model, t: float, y) -> Pii0State | XxState | XxPrimeState:
    """Build the state dataclass for ``model`` from a time and component vector."""
    return state_type(model)(float(t), *(float(v) for v in y))


# --- scalar right-hand sides on plain floats (shared by both integrators) ---

def f_pii0(t, y):
    s, sd = y
    return (sd, 2.0 * s**3 + t * s)


def f_xxprime(t, y):
    S, Sd, Sdd = y
    return (Sd, Sdd, 12.0 * S * Sd + 4.0 * t * Sd + 2.0 * S)


def xx_guard_tripped(S: float, S_dot: float, eta: float) -> bool:
    return abs(S) <= eta * max(1.0, S_dot * S_dot)


def f_xx(t, y, eta=DEFAULT_ETA):
    S, Sd = y
    if xx_guard_tripped(S, Sd, eta):
        raise NearSingularError(
            f"XX is singular at t={float(t)!r} (S={float(S)!r}, S'={float(Sd)!r}); "
            "lift the data to XX' with lift_xx_to_xxprime and integrate that instead"
        )
    return (Sd, Sd * Sd / (2.0 * S) + 4.0 * S * S + 2.0 * t * S)


def g_pii0(t, y):
    """Second time derivative of the PII0 state along the flow."""
    s, sd = y
    return (2.0 * s**3 + t * s, 6.0 * s * s * sd + s + t * sd)


def g_xx(t, y, eta=DEFAULT_ETA):
    # d/dt of the XX right side along the flow is exactly the XX' right side
    S, Sd = y
    return (f_xx(t, y, eta)[1], 12.0 * S * Sd + 4.0 * t * Sd + 2.0 * S)


def g_xxprime(t, y):
    S, Sd, Sdd = y
    return (Sdd, 12.0 * S * Sd + 4.0 * t * Sd + 2.0 * S,
            12.0 * Sd * Sd + 12.0 * S * Sdd + 6.0 * Sd + 4.0 * t * Sdd)


def second_derivative_function(model, eta: float = DEFAULT_ETA):
    """Return ``g(t, y) -> tuple``, the second time derivative of the state."""
    model = Model.parse(model)
    if model is Model.PII0:
        return g_pii0
    if model is Model.XX:
        return lambda t, y: g_xx(t, y, eta)
    if model is Model.XXPRIME:
        return g_xxprime
    raise UsageError(f"model {model.value} has no integrable right-hand side")


def rhs_function(model, eta: float = DEFAULT_ETA):
    """Return ``f(t, y) -> tuple`` for ``model``."""
    model = Model.parse(model)
    if model is Model.PII0:
        return f_pii0
    if model is Model.XX:
        return lambda t, y: f_xx(t, y, eta)
    if model is Model.XXPRIME:
        return f_xxprime
    raise UsageError(f"model {model.value} has no integrable right-hand side")


# --- public operations on state objects ---

def rhs_pii0(state: Pii0State) -> tuple[float, float]:
    return f_pii0(state.t, (state.s, state.s_dot))


def rhs_xx(state: XxState, eta: float = DEFAULT_ETA) -> tuple[float, float]:
    """Right side of XX in first-order form.

    Raises :class:`NearSingularError` when ``|S| <= eta * max(1, S'^2)``; the
    guard scales with ``S'^2`` because that is the numerator of the singular
    term.
    """
    return f_xx(state.t, (state.S, state.S_dot), eta)


def rhs_xxprime(state: XxPrimeState) -> tuple[float, float, float]:
    return f_xxprime(state.t, (state.S, state.S_dot, state.S_ddot))


def lift_xx_to_xxprime(state: XxState, s_ddot_at_zero: float | None = None) -> XxPrimeState:
    """Promote XX data ``(t, S, S')`` to XX' data ``(t, S, S', S'')``.

    Away from a zero, S'' is read off XX itself.  At a zero the XX data fix
    nothing beyond S = S' = 0, and the solution is pinned down by the second
    derivative, which must then be supplied and nonzero.
    """
    t, S, Sd = state.t, state.S, state.S_dot
    if S != 0.0:
        if s_ddot_at_zero is not None:
            raise UsageError("s_ddot_at_zero is only meaningful when S = 0")
        # integer literals keep exact (e.g. Fraction) inputs exact
        Sdd = Sd * Sd / (2 * S) + 4 * S * S + 2 * t * S
        return XxPrimeState(t, S, Sd, Sdd)
    if Sd != 0.0:
        raise InconsistentDataError(
            f"S = 0 forces S' = 0 for a solution of XX, got S' = {Sd!r} at t = {t!r}"
        )
    if s_ddot_at_zero is None:
        raise UsageError("lifting a zero of S requires s_ddot_at_zero")
    if s_ddot_at_zero == 0.0:
        raise DegenerateZeroError(
            "S = S' = S'' = 0 is the data of the zero solution; construct it explicitly"
        )
    return XxPrimeState(t, 0.0, 0.0, float(s_ddot_at_zero))


def invariant_c(state: XxPrimeState) -> float:
    """``C = 2 S S'' - S'^2 - 8 S^3 - 4 t S^2``.

    C vanishes exactly on XX data and is constant along XX' flows.
    """
    t, S, Sd, Sdd = state.t, state.S, state.S_dot, state.S_ddot
    return 2 * S * Sdd - Sd * Sd - 8 * S**3 - 4 * t * S * S


def invariant_c_terms(t, S, Sd, Sdd) -> np.ndarray:
    """The four terms of C, broadcasting over arrays; used for normalisation."""
    t, S, Sd, Sdd = (np.asarray(x, dtype=float) for x in (t, S, Sd, Sdd))
    return np.stack([2.0 * S * Sdd, -Sd * Sd, -8.0 * S**3, -4.0 * t * S * S])


def invariant_c_array(t, S, Sd, Sdd) -> np.ndarray:
    return invariant_c_terms(t, S, Sd, Sdd).sum(axis=0)


@dataclass(frozen=True)
class SeriesAtZero:
    a: float
    c: float
    coeffs: tuple[float, ...]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, h):
        """Evaluate the truncated series at offset ``h`` from the zero."""
        return np.polynomial.polynomial.polyval(h, self.coeffs)


def series_at_zero(a: float, c: float, order: int = 8) -> SeriesAtZero:
    """Taylor coefficients of the XX' solution with S(a) = S'(a) = 0, S''(a) = c.

    Writing ``S = sum_k a_k h^k`` with ``t = a + h`` and matching powers of
    ``h`` in XX' gives, for k >= 0::

        (k+1)(k+2)(k+3) a_{k+3} = 12 sum_{i+j=k} a_i (j+1) a_{j+1}
                                  + 4 a (k+1) a_{k+1} + (4k + 2) a_k
    """
    if c == 0.0:
        raise DegenerateZeroError("a zero with S''(a) = 0 is not isolated")
    if not (4 <= order <= MAX_SERIES_ORDER):
        raise UsageError(f"series order must lie in [4, {MAX_SERIES_ORDER}], got {order}")
    co = [0.0] * (order + 1)
    co[2] = c / 2.0
    for k in range(order - 2):
        conv = sum(co[i] * (k - i + 1) * co[k - i + 1] for i in range(k + 1))
        rhs = 12.0 * conv + 4.0 * a * (k + 1) * co[k + 1] + (4.0 * k + 2.0) * co[k]
        co[k + 3] = rhs / ((k + 1) * (k + 2) * (k + 3))
    return SeriesAtZero(float(a), float(c), tuple(co))
