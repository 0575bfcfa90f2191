import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from painleve_xx import fixtures as fx
from painleve_xx.errors import (
    BudgetExceededError,
    NearSingularError,
    OracleInconsistencyError,
    RangeError,
    StepSizeUnderflowError,
    UsageError,
)
from painleve_xx.integrator import (
    EventHit,
    EventSpec,
    ToleranceConfig,
    Trajectory,
    evaluate_dense,
    hermite_coeffs,
    integrate,
    oracle_integrate,
    richardson_reference,
    _poly,
)
from painleve_xx.models import (
    Model,
    Pii0State,
    XxPrimeState,
    XxState,
    f_pii0,
    f_xxprime,
    invariant_c_terms,
    lift_xx_to_xxprime,
)

REFS = json.loads((Path(__file__).parent / "fixtures" / "oracle_reference.json").read_text())["references"]
ULP = np.finfo(float).eps


def rel_gap(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


def test_hermite_interpolant_is_exact_on_quintics():
    rng = np.random.default_rng(3)
    p = rng.normal(size=6)
    d1, d2 = np.polyder(p), np.polyder(p, 2)
    t0, h = 0.3, 0.7
    c = hermite_coeffs(h, *(np.array([np.polyval(q, t0)]) for q in (p, d1, d2)),
                       *(np.array([np.polyval(q, t0 + h)]) for q in (p, d1, d2)))
    theta = np.linspace(0, 1, 11)
    got = _poly(theta, np.broadcast_to(c, (11, 6, 1)))[:, 0]
    np.testing.assert_allclose(got, np.polyval(p, t0 + h * theta), rtol=1e-13, atol=1e-13)


def test_trivial_pii0_solution_stays_exactly_zero():
    traj, _ = integrate(Model.PII0, Pii0State(0.0, 0.0, 0.0), (0.0, 5.0))
    assert np.all(traj.y == 0.0)
    assert np.all(traj.sample(50)[1] == 0.0)


def test_nodes_are_reproduced_by_dense_output(run):
    traj = run("xxp_flat")
    got = traj.eval(traj.t)
    assert np.all(np.abs(got - traj.y) <= 4 * ULP * np.maximum(np.abs(traj.y), 1e-300))
    mid = 0.5 * (traj.t[:-1] + traj.t[1:])
    assert traj.eval(mid).shape == (len(mid), 3)


def test_dense_derivative_matches_right_side(run):
    traj = run("pii0_crossing")
    ts = np.linspace(-1, 1, 37)
    want = np.array([f_pii0(t, y) for t, y in zip(ts, traj.eval(ts))])
    np.testing.assert_allclose(traj.derivative(ts), want, rtol=1e-8, atol=1e-8)


def test_dense_output_between_nodes_matches_oracle():
    init = Pii0State(0.0, 0.5, 0.0)
    traj, _ = integrate(Model.PII0, init, (0.0, 1.0))
    for t_mid in (0.25, 0.5, 0.625):
        ref = richardson_reference(Model.PII0, init, (0.0, t_mid), h=1e-3 * t_mid / 0.25 / 4, agree=1e-9)
        assert rel_gap(traj.eval(t_mid), ref.state.as_array()) <= 1e-9


def test_error_decreases_with_tolerance():
    key = fx.reference_key(fx.PII0_NOWHERE_ZERO, (0.0, 1.0))
    ref = REFS[key]["state"]
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        traj, _ = fx.PII0_NOWHERE_ZERO.run(ToleranceConfig(rtol=tol, atol=tol))
        errs.append(rel_gap(traj.y[-1], ref))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-9


def test_integration_is_reversible():
    fwd, _ = integrate(Model.XXPRIME, fx.BY_NAME["xxp_touching"].init, (-1.0, 0.0))
    end = XxPrimeState(0.0, *fwd.y[-1])
    back, _ = integrate(Model.XXPRIME, end, (0.0, -1.0))
    assert rel_gap(back.y[-1], fwd.y[0]) <= 1e-8
    assert not back.increasing and back.lo == -1.0 and back.hi == 0.0


@settings(max_examples=15, deadline=None)
@given(t0=st.floats(-1, 0), S=st.floats(0.2, 1.0) | st.floats(-1.0, -0.2), Sd=st.floats(-0.5, 0.5))
def test_lifted_flows_conserve_c(t0, S, Sd):
    init = lift_xx_to_xxprime(XxState(t0, S, Sd))
    traj, _ = integrate(Model.XXPRIME, init, (t0, t0 + 0.5))
    ts = np.linspace(t0, t0 + 0.5, 50)
    terms = invariant_c_terms(ts, *traj.eval(ts).T)
    assert np.max(np.abs(terms.sum(axis=0))) <= 1e-8 * max(1.0, np.max(np.abs(terms)))


def test_xx_model_agrees_with_lifted_xxprime(run):
    xx, xxp = run("xx_direct"), run("xxp_flat")
    ts = np.linspace(0, 1, 21)
    assert rel_gap(xx.eval(ts), xxp.eval(ts)[:, :2]) <= 1e-8


def test_two_sided_integration_stitches_pieces(run):
    traj = run("pii0_crossing")
    assert traj.t_start == -1.0 and traj.t_end == 1.0
    assert np.all(np.diff(traj.t) > 0)
    left, _ = integrate(Model.PII0, Pii0State(0.0, 0.0, 1.0), (0.0, -1.0))
    right, _ = integrate(Model.PII0, Pii0State(0.0, 0.0, 1.0), (0.0, 1.0))
    assert np.array_equal(traj.eval(-0.5), left.eval(-0.5))
    assert np.array_equal(traj.eval(0.5), right.eval(0.5))
    assert np.array_equal(traj.eval(0.0), [0.0, 1.0])


def test_event_bracketing_and_direction():
    init = Pii0State(0.0, 0.5, -1.0)
    traj, hits = integrate(Model.PII0, init, (0.0, 2.0), events=[EventSpec("s-crosses-zero")])
    assert len(hits) == 1
    hit = hits[0]
    assert hit.direction == -1
    assert abs(traj.eval(hit.t)[0]) <= 1e-11
    s_lo, s_hi = traj.eval(hit.t - 1e-9)[0], traj.eval(hit.t + 1e-9)[0]
    assert s_lo > 0 > s_hi
    _, none = integrate(Model.PII0, init, (0.0, 2.0), events=[EventSpec("s-crosses-zero", "rising")])
    assert none == []


def test_terminal_event_truncates():
    init = Pii0State(0.0, 0.5, -1.0)
    traj, hits = integrate(Model.PII0, init, (0.0, 2.0),
                           events=[EventSpec.parse("s-crosses-zero:falling:terminal")])
    assert traj.t_end == hits[0].t
    with pytest.raises(RangeError):
        traj.eval(hits[0].t + 1e-3)


def test_event_at_the_initial_point_of_a_two_sided_run():
    _, hits = fx.PII0_CROSSING.run(events=[EventSpec("s-crosses-zero")])
    assert [(h.t, h.direction) for h in hits] == [(0.0, 1)]


def test_touching_zero_is_invisible_to_sign_events(run):
    f = fx.BY_NAME["xxp_touching"]
    _, hits = f.run(events=[EventSpec("S-crosses-zero"), EventSpec("Sdot-crosses-zero", "rising")])
    assert [h.name for h in hits] == ["S_dot-crosses-zero"]
    assert hits[0].t == pytest.approx(-0.0466, abs=1e-3)


def test_event_spec_validation():
    with pytest.raises(UsageError):
        EventSpec("q-crosses-zero")
    with pytest.raises(UsageError):
        EventSpec("S-crosses-zero", "sideways")
    with pytest.raises(UsageError):
        integrate(Model.PII0, Pii0State(0, 1, 0), (0, 1), events=[EventSpec("S-crosses-zero")])
    assert EventSpec.parse("Ṡ-crosses-zero") == EventSpec("S_dot-crosses-zero")
    hit = EventHit("s-crosses-zero", 0.5, (0.0, 1.0), 1)
    assert EventHit.from_dict(json.loads(json.dumps(hit.to_dict()))) == hit


def test_blow_up_returns_truncated_partial():
    init = lift_xx_to_xxprime(XxState(0.0, 1.0, 2.0))
    with pytest.raises(StepSizeUnderflowError) as info:
        integrate(Model.XXPRIME, init, (0.0, 1.0))
    partial = info.value.partial
    assert partial.truncated
    assert 0.97 < partial.t_end < 0.99
    assert info.value.exit_code == 4


def test_step_budget():
    with pytest.raises(BudgetExceededError) as info:
        integrate(Model.PII0, Pii0State(0, 0.5, 0), (0, 1), ToleranceConfig(max_steps=5))
    assert info.value.partial.truncated


def test_bad_requests():
    with pytest.raises(UsageError):
        integrate(Model.PII0, Pii0State(0, 1, 0), (0, 0))
    with pytest.raises(UsageError):
        integrate(Model.PII0, XxState(0, 1, 0), (0, 1))
    with pytest.raises(UsageError):
        integrate(Model.PII0, Pii0State(2, 1, 0), (0, 1))
    with pytest.raises(UsageError):
        integrate(Model.SIGMA, Pii0State(0, 1, 0), (0, 1))
    with pytest.raises(NearSingularError):
        integrate(Model.XX, XxState(0, 0.0, 1e-15), (0, 1))
    with pytest.raises(UsageError):
        ToleranceConfig(rtol=0)
    with pytest.raises(UsageError):
        ToleranceConfig(max_steps=0)


def test_range_error_outside_span(run):
    traj = run("xxp_flat")
    with pytest.raises(RangeError):
        traj.eval(1.5)
    with pytest.raises(RangeError):
        evaluate_dense(traj, -0.1)
    assert evaluate_dense(traj, 0.0) == fx.BY_NAME["xxp_flat"].init


def test_trajectory_json_round_trip(run):
    traj = run("xxp_touching")
    back = Trajectory.from_dict(json.loads(json.dumps(traj.to_dict())))
    for name in ("t", "y", "step_t0", "step_h", "coeffs"):
        assert np.array_equal(getattr(back, name), getattr(traj, name))
    assert (back.model, back.t_start, back.t_end, back.tol, back.stats, back.truncated) == (
        traj.model, traj.t_start, traj.t_end, traj.tol, traj.stats, traj.truncated)
    ts = np.linspace(-1, 0, 33)
    assert np.array_equal(back.eval(ts), traj.eval(ts))


def test_tolerance_config_round_trip():
    tol = ToleranceConfig(rtol=1e-7, atol=1e-9, h_init=1e-3, max_steps=100)
    assert ToleranceConfig.from_dict(json.loads(json.dumps(tol.to_dict()))) == tol


def test_oracle_on_exact_solution():
    # s = 0 is exact; the XX' state (0, 0, 1) at t = 0 grows like t^2 / 2 at first
    assert oracle_integrate(Model.PII0, Pii0State(0, 0, 0), (0, 1), 0.1).as_array().tolist() == [0, 0]
    end = oracle_integrate(Model.XXPRIME, XxPrimeState(0, 0, 0, 1), (0, 1e-3), 1e-4)
    assert end.S == pytest.approx(0.5e-6, rel=1e-6)


def test_oracle_step_must_divide_span():
    with pytest.raises(UsageError):
        oracle_integrate(Model.PII0, Pii0State(0, 1, 0), (0, 1), 0.3)
    with pytest.raises(UsageError):
        oracle_integrate(Model.PII0, Pii0State(0.5, 1, 0), (0, 1), 0.1)


def test_oracle_detects_inconsistent_extrapolation():
    with pytest.raises(OracleInconsistencyError):
        richardson_reference(Model.XXPRIME, fx.BY_NAME["xxp_flat"].init, (0, 1), h=0.25)


def test_oracle_converges_at_fourth_order():
    init = Pii0State(0.0, 0.5, 0.0)
    ref = np.array(REFS[fx.reference_key(fx.PII0_NOWHERE_ZERO, (0.0, 1.0))]["state"])
    errs = [np.max(np.abs(oracle_integrate(Model.PII0, init, (0, 1), h).as_array() - ref))
            for h in (0.1, 0.05, 0.025)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(14 < r < 18 for r in ratios)


def test_rhs_at_nodes_matches_xxprime(run):
    traj = run("xxp_zero_negative")
    k = len(traj.t) // 2
    want = f_xxprime(traj.t[k], traj.y[k])
    np.testing.assert_allclose(traj.derivative(traj.t[k]), want, rtol=1e-12, atol=1e-12)
