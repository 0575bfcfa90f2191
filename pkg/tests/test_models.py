import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from painleve_xx import fixtures as fx
from painleve_xx.errors import (
    DegenerateZeroError,
    InconsistentDataError,
    InvalidStateError,
    NearSingularError,
    UsageError,
)
from painleve_xx.models import (
    MAX_SERIES_ORDER,
    Model,
    Pii0State,
    XxPrimeState,
    XxState,
    invariant_c,
    invariant_c_terms,
    lift_xx_to_xxprime,
    make_state,
    rhs_pii0,
    rhs_xx,
    rhs_xxprime,
    series_at_zero,
)

EPS = np.finfo(float).eps

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
away_from_zero = st.one_of(st.floats(min_value=1e-3, max_value=10.0),
                           st.floats(min_value=-10.0, max_value=-1e-3))


def test_rhs_values():
    assert rhs_pii0(Pii0State(0.0, 0.0, 0.0)) == (0.0, 0.0)
    assert rhs_pii0(Pii0State(1.0, 1.0, 0.0)) == (0.0, 3.0)
    assert rhs_xx(XxState(0.0, 1.0, 0.0)) == (0.0, 4.0)
    assert rhs_xxprime(XxPrimeState(0.0, 1.0, 0.0, 0.0)) == (0.0, 0.0, 2.0)
    assert rhs_xxprime(XxPrimeState(1.0, 1.0, 1.0, 0.0)) == (1.0, 0.0, 18.0)


@pytest.mark.parametrize("S, S_dot", [(0.0, 0.0), (0.0, 1e-15), (1e-14, 0.5), (-1e-13, 0.0)])
def test_xx_guard_trips_near_zero(S, S_dot):
    with pytest.raises(NearSingularError, match="lift"):
        rhs_xx(XxState(0.0, S, S_dot))


def test_xx_guard_scales_with_slope():
    rhs_xx(XxState(0.0, 1e-9, 1.0))
    with pytest.raises(NearSingularError):
        rhs_xx(XxState(0.0, 1e-9, 1e2), eta=1e-12)


@pytest.mark.parametrize("cls, n", [(Pii0State, 2), (XxState, 2), (XxPrimeState, 3)])
@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_states_reject_non_finite(cls, n, bad):
    with pytest.raises(InvalidStateError):
        cls(0.0, *([1.0] * (n - 1) + [bad]))
    with pytest.raises(InvalidStateError):
        cls(bad, *([1.0] * n))


def test_make_state_and_columns():
    st_ = make_state(Model.XXPRIME, 1, [1, 2, 3])
    assert st_ == XxPrimeState(1.0, 1.0, 2.0, 3.0)
    assert Model.parse("PII0") is Model.PII0
    assert Model.XX.columns == ("S", "S_dot")
    with pytest.raises(UsageError):
        Model.parse("pii1")


def test_lift_away_from_zero():
    assert lift_xx_to_xxprime(XxState(0.0, 1.0, 0.0)) == XxPrimeState(0.0, 1.0, 0.0, 4.0)
    # S'' = 1/(2*0.5) + 4*0.25 + 2*(-1)*0.5 = 1
    assert lift_xx_to_xxprime(XxState(-1.0, 0.5, -1.0)).S_ddot == 1.0


def test_lift_at_zero():
    assert lift_xx_to_xxprime(XxState(0.5, 0.0, 0.0), 2.0) == XxPrimeState(0.5, 0.0, 0.0, 2.0)
    with pytest.raises(DegenerateZeroError):
        lift_xx_to_xxprime(XxState(0.0, 0.0, 0.0), 0.0)
    with pytest.raises(UsageError):
        lift_xx_to_xxprime(XxState(0.0, 0.0, 0.0))
    with pytest.raises(InconsistentDataError):
        lift_xx_to_xxprime(XxState(0.0, 0.0, 1.0), 2.0)
    with pytest.raises(UsageError):
        lift_xx_to_xxprime(XxState(0.0, 1.0, 0.0), 2.0)


def test_invariant_of_the_zero_lift_vanishes():
    assert invariant_c(lift_xx_to_xxprime(XxState(3.0, 0.0, 0.0), -7.0)) == 0.0


@given(t=finite, S=away_from_zero, S_dot=finite)
def test_lift_has_zero_invariant_exactly_in_rationals(t, S, S_dot):
    t, S, S_dot = Fraction(t), Fraction(S), Fraction(S_dot)
    lifted = lift_xx_to_xxprime(XxState(t, S, S_dot))
    assert invariant_c(lifted) == 0


@given(t=finite, S=away_from_zero, S_dot=finite)
def test_lift_has_zero_invariant_in_floats(t, S, S_dot):
    lifted = lift_xx_to_xxprime(XxState(t, S, S_dot))
    terms = invariant_c_terms(lifted.t, lifted.S, lifted.S_dot, lifted.S_ddot)
    assert abs(invariant_c(lifted)) <= 8 * EPS * np.sum(np.abs(terms))


def test_invariant_is_a_first_integral_of_xxprime():
    t, S, S1, S2 = sp.symbols("t S S1 S2")
    C = 2 * S * S2 - S1**2 - 8 * S**3 - 4 * t * S**2
    S3 = 12 * S * S1 + 4 * t * S1 + 2 * S
    dC = sp.diff(C, t) + sp.diff(C, S) * S1 + sp.diff(C, S1) * S2 + sp.diff(C, S2) * S3
    assert sp.simplify(dC) == 0
    state = XxPrimeState(0.3, -1.2, 0.7, 2.5)
    expected = float(C.subs({t: 0.3, S: -1.2, S1: 0.7, S2: 2.5}))
    assert invariant_c(state) == pytest.approx(expected, rel=1e-15)


def _taylor_oracle(order):
    """Derivatives S^(n)(a) of the XX' solution with S = S' = 0, S'' = c, by repeated
    differentiation of the equation; returned as a lambdified function of (a, c)."""
    t, S0, S1, S2 = sp.symbols("t S0 S1 S2")
    S3 = 12 * S0 * S1 + 4 * t * S1 + 2 * S0
    chain = {S0: S1, S1: S2, S2: S3}
    derivs = [S0, S1, S2]
    expr = S2
    for _ in range(order - 2):
        expr = sp.expand(sp.diff(expr, t) + sum(sp.diff(expr, k) * v for k, v in chain.items()))
        derivs.append(expr)
    a, c = sp.symbols("a c")
    coeffs = [sp.expand(d.subs({t: a, S0: 0, S1: 0, S2: c})) / sp.factorial(n)
              for n, d in enumerate(derivs)]
    return sp.lambdify((a, c), coeffs, "math")


ORACLE_12 = _taylor_oracle(MAX_SERIES_ORDER)


@pytest.mark.parametrize("a, c", [(0.0, 2.0), (-1.0, 0.5), (1.5, -3.0), (2.0, 1e-3)])
def test_series_matches_symbolic_derivatives(a, c):
    ser = series_at_zero(a, c, MAX_SERIES_ORDER)
    want = ORACLE_12(a, c)
    assert ser.order == MAX_SERIES_ORDER
    np.testing.assert_allclose(ser.coeffs, want, rtol=1e-13, atol=1e-300)


@settings(max_examples=60)
@given(a=st.floats(-3, 3), c=away_from_zero, order=st.integers(4, MAX_SERIES_ORDER))
def test_series_low_coefficients(a, c, order):
    ser = series_at_zero(a, c, order)
    assert ser.coeffs[:4] == (0.0, 0.0, c / 2, 0.0)
    assert ser.coeffs[4] == pytest.approx(a * c / 6, rel=1e-15, abs=1e-300)
    np.testing.assert_allclose(ser.coeffs, ORACLE_12(a, c)[: order + 1], rtol=1e-12, atol=1e-300)


@settings(max_examples=60)
@given(a=st.floats(-3, 3), c=away_from_zero, u=st.floats(-1, 1).filter(lambda x: abs(x) > 1e-3))
def test_series_keeps_the_sign_of_c_near_the_zero(a, c, u):
    # the h^2 term dominates for |h| well inside the radius of convergence
    h = 1e-3 * u
    assert np.sign(series_at_zero(a, c)(h)) == np.sign(c)


def test_series_agrees_with_integration_from_the_zero(run):
    traj = run("xxp_zero_positive")
    ser = series_at_zero(0.0, 2.0, MAX_SERIES_ORDER)
    for h in (-0.05, -0.01, 0.01, 0.05):
        assert ser(h) == pytest.approx(traj.eval(h)[0], rel=1e-9)


def test_series_rejects_bad_arguments():
    with pytest.raises(DegenerateZeroError):
        series_at_zero(0.0, 0.0)
    with pytest.raises(UsageError):
        series_at_zero(0.0, 1.0, order=3)
    with pytest.raises(UsageError):
        series_at_zero(0.0, 1.0, order=MAX_SERIES_ORDER + 1)


def test_fixture_initial_states_are_xx_data():
    for f in fx.CONSERVATION:
        assert abs(invariant_c(f.init)) <= 1e-15
