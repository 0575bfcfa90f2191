"""Executable checks of the zero-structure results, grouped into suites.

Each check becomes a :class:`Case` with a measured quantity, a threshold
and a theorem tag.  Suites are ``theorems``, ``conservation``, ``roundtrip``
and ``negative_branch``; ``all`` is their union.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fixtures as fx
from .errors import BranchViolationError, UsageError
from .integrator import ToleranceConfig, Trajectory
from .models import Model, Pii0State, invariant_c_terms
from .paths import DensePath, SampledPath, as_dense, first_derivative, second_derivative, xx_columns
from .transforms import sqrt_negative, sqrt_positive, sqrt_signed, square_trajectory
from .zero_analysis import (
    TOL_CLASS,
    TOL_DERIV,
    TOL_ZERO,
    ZeroClass,
    check_no_sign_change,
    locate_zeros,
)

THEOREM_TAGS = frozenset(
    {"X'", "ne", "nozero", "square", "notroot", "root", "sigma", "no_sign_change", "conservation"}
)
SUITES = ("theorems", "conservation", "roundtrip", "negative_branch")

# first-difference stencils tolerate a smaller step than second differences
FIRST_DIFF_DELTA = 5e-4
SECOND_DIFF_DELTA = 2e-3
CONSERVATION_SAMPLES = 100
TRANSFORM_SAMPLES = 401  # odd, so symmetric spans sample their midpoint
RESIDUAL_BOUND = 1e-6
SIGMA_BOUND = 1e-8
C_SQUARE_BOUND = 1e-9
C_DRIFT_BOUND = 1e-8
ROUNDTRIP_BOUND = 1e-7
SDDOT_MATCH_BOUND = 1e-5


@dataclass(frozen=True)
class Case:
    id: str
    theorem: str
    measured: float
    threshold: float
    passed: bool
    relation: str = "<="
    detail: str = ""

    def __post_init__(self):
        if self.theorem not in THEOREM_TAGS:
            raise ValueError(f"unknown theorem tag {self.theorem!r}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "theorem": self.theorem,
            "measured": self.measured,
            "threshold": self.threshold,
            "relation": self.relation,
            "pass": self.passed,
            "detail": self.detail,
        }


def _le(id, theorem, measured, threshold, detail=""):
    measured = float(measured)
    return Case(id, theorem, measured, threshold, bool(measured <= threshold), "<=", detail)


def _ge(id, theorem, measured, threshold, detail=""):
    measured = float(measured)
    return Case(id, theorem, measured, threshold, bool(measured >= threshold), ">=", detail)


def _raises(id, theorem, fn, exc=BranchViolationError):
    try:
        fn()
    except exc as err:
        return Case(id, theorem, 1.0, 1.0, True, "raises", str(err))
    return Case(id, theorem, 0.0, 1.0, False, "raises", f"{exc.__name__} was not raised")


@dataclass
class VerificationReport:
    suite: str
    cases: list[Case]
    tolerances: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def failed(self) -> list[Case]:
        return [c for c in self.cases if not c.passed]

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "suite": self.suite,
            "cases": [c.to_dict() for c in self.cases],
            "tolerances": self.tolerances,
            "integrator_stats": self.stats,
            "overall": self.overall,
        }


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def residual(traj_or_path, model=None, samples: int = 256) -> float:
    """Normalised sup-norm residual of the equation ``model`` along a solution.

    PII0 and sigma paths: fourth-order second differences of the dense first
    component against the right side.  XX / XX' data: dense-differentiated
    S' against S'', and dense-differentiated S'' against the XX' right side.
    The sup is divided by ``max(1, sup |right side|)``.
    """
    dense = as_dense(traj_or_path)
    model = Model.parse(model) if model is not None else dense.model
    if isinstance(traj_or_path, SampledPath):
        ts = traj_or_path.t
    else:
        ts = np.linspace(dense.lo, dense.hi, samples)
    if len(ts) < 8:
        raise UsageError("residual needs at least 8 samples")

    if model in (Model.PII0, Model.SIGMA):
        r = dense.eval(ts)[:, 0]
        rhs = 2.0 * r**3 + ts * r if model is Model.PII0 else ts * r - 2.0 * r**3
        lhs = second_derivative(dense, ts, delta=SECOND_DIFF_DELTA)
        return float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs))))

    if dense.model.is_xx_type:
        def lifted(tq):
            return np.stack(xx_columns(dense, tq), axis=-1)

        xxp = DensePath(Model.XXPRIME, dense.t_start, dense.t_end, lifted,
                        op="lift", source=dense)
        S, Sd, Sdd = xx_columns(dense, ts)
        rhs2 = 12.0 * S * Sd + 4.0 * ts * Sd + 2.0 * S
        err1 = np.abs(first_derivative(xxp, ts, 1, FIRST_DIFF_DELTA) - Sdd)
        err2 = np.abs(first_derivative(xxp, ts, 2, FIRST_DIFF_DELTA) - rhs2)
        scale = max(1.0, float(np.max(np.abs(Sdd))), float(np.max(np.abs(rhs2))))
        return float(max(err1.max(), err2.max()) / scale)
    raise UsageError(f"cannot form a {model.value} residual from {dense.model.value} data")


def normalized_c(obj, ts) -> np.ndarray:
    """|C| at ``ts`` divided by ``max(1, largest term of C over ts)``."""
    S, Sd, Sdd = xx_columns(obj, ts)
    terms = invariant_c_terms(ts, S, Sd, Sdd)
    scale = max(1.0, float(np.max(np.abs(terms))))
    return np.abs(terms.sum(axis=0)) / scale


# ---------------------------------------------------------------------------
# case producers
# ---------------------------------------------------------------------------

class _Context:
    """Fixture runs and derived objects, computed once per suite run."""

    def __init__(self, tol: ToleranceConfig):
        self.tol = tol
        self._runs: dict[str, tuple[Trajectory, list]] = {}
        self._squared = None

    def run(self, fixture) -> Trajectory:
        if fixture.name not in self._runs:
            self._runs[fixture.name] = fixture.run(self.tol)
        return self._runs[fixture.name][0]

    @property
    def squared(self) -> SampledPath:
        if self._squared is None:
            self._squared = square_trajectory(self.run(fx.PII0_CROSSING), TRANSFORM_SAMPLES)
        return self._squared

    def stats(self) -> dict:
        return {name: dict(run[0].stats) for name, run in sorted(self._runs.items())}


def _conservation(ctx):
    out = []
    for f in fx.CONSERVATION:
        traj = ctx.run(f)
        ts = np.linspace(traj.t_start, traj.t_end, CONSERVATION_SAMPLES)
        out.append(_le(f"conservation/{f.name}", "conservation", normalized_c(traj, ts).max(),
                       C_DRIFT_BOUND, "max |C| / max(1, largest term) over dense samples"))
    return out


def _xx_zero_sources(ctx):
    yield "pii0_crossing_squared", ctx.squared
    for f in (fx.BY_NAME["xxp_touching"], fx.XXP_ZERO_POSITIVE, fx.XXP_ZERO_NEGATIVE):
        yield f.name, ctx.run(f)


def _zero_structure(ctx):
    out = []
    for name, obj in _xx_zero_sources(ctx):
        zeros = locate_zeros(obj)
        out.append(_ge(f"ne/{name}/count", "ne", len(zeros), 1, "at least one zero located"))
        for k, z in enumerate(zeros):
            base = f"{name}/zero{k}"
            out.append(_le(f"X'/{base}/S_dot", "X'", abs(z.value_checks[1]) / z.scale, TOL_DERIV,
                           f"|S'(a)| / scale at a={z.location!r}"))
            out.append(_le(f"X'/{base}/S_dddot", "X'", abs(z.third_derivative) / z.scale, TOL_DERIV,
                           "|S'''(a)| / scale from the XX' right side"))
            out.append(_ge(f"ne/{base}", "ne", abs(z.second_derivative) / z.scale, TOL_CLASS,
                           f"|S''(a)| / scale, classified {z.classification.value}"))
    return out


def _no_sign_change(ctx):
    out = []
    sources = list(_xx_zero_sources(ctx)) + [(f.name, ctx.run(f)) for f in fx.CONSERVATION
                                             if f.name != "xxp_touching"]
    for name, obj in sources:
        rep = check_no_sign_change(obj, locate_zeros(obj))
        out.append(_le(f"no_sign_change/{name}", "no_sign_change", len(rep.offending), 0,
                       "; ".join(o["reason"] for o in rep.offending)))
    return out


def _x_prime(ctx):
    traj = ctx.run(fx.XX_DIRECT)
    lifted = ctx.run(fx.BY_NAME["xxp_flat"])
    end_gap = np.max(np.abs(traj.y[-1] - lifted.y[-1, :2])) / np.max(np.abs(lifted.y[-1, :2]))
    return [
        _le("X'/xx_direct/residual", "X'", residual(traj), RESIDUAL_BOUND,
            "XX-model run checked against XX'"),
        _le("X'/xx_direct/matches_lift", "X'", end_gap, 1e-8,
            "XX run vs XX' run from lifted data, relative end-state gap"),
    ]


def _nozero(ctx):
    sq = square_trajectory(ctx.run(fx.PII0_NOWHERE_ZERO), TRANSFORM_SAMPLES)
    pos = sqrt_positive(ctx.run(fx.BY_NAME["xxp_flat"]), TRANSFORM_SAMPLES)
    rhs_scale = max(1.0, float(np.max(np.abs(2 * pos.values[:, 0] ** 3 + pos.t * pos.values[:, 0]))))
    return [
        _le("nozero/square/pii0_nowhere_zero", "nozero", normalized_c(sq, sq.t).max(),
            C_SQUARE_BOUND, "squared nowhere-zero PII0 solution satisfies XX"),
        _le("nozero/sqrt_positive/xxp_flat/pointwise", "nozero",
            np.max(np.abs(pos.residual)) / rhs_scale, SIGMA_BOUND,
            "root of positive XX solution: algebraic PII0 residual"),
        _le("nozero/sqrt_positive/xxp_flat/residual", "nozero", residual(pos), RESIDUAL_BOUND,
            "root of positive XX solution: finite-difference PII0 residual"),
    ]


def _square(ctx):
    pii0 = ctx.run(fx.PII0_CROSSING)
    sq = ctx.squared
    s_zeros = locate_zeros(pii0)
    S_zeros = locate_zeros(sq)
    out = [
        _le("square/pii0_crossing/invariant", "square",
            normalized_c(sq, np.union1d(sq.t, [z.location for z in S_zeros])).max(), C_SQUARE_BOUND,
            "|C| of the squared path, zero included"),
        _le("square/pii0_crossing/zero_count", "square", abs(len(s_zeros) - len(S_zeros)), 0,
            "zeros of s and of s^2 coincide in number"),
    ]
    for k, (z, Z) in enumerate(zip(s_zeros, S_zeros)):
        want = 2.0 * z.first_derivative**2
        out.append(_le(f"square/pii0_crossing/zero{k}/sddot", "square",
                       abs(Z.second_derivative - want) / abs(want), SDDOT_MATCH_BOUND,
                       f"S''(a)={Z.second_derivative!r} vs 2 s'(a)^2={want!r}"))
    return out


def _notroot(ctx):
    return [
        _raises("notroot/pii0_crossing_squared", "notroot", lambda: sqrt_positive(ctx.squared)),
        _raises("notroot/xxp_touching", "notroot",
                lambda: sqrt_positive(ctx.run(fx.BY_NAME["xxp_touching"]))),
        _raises("notroot/xxp_zero_positive", "notroot",
                lambda: sqrt_positive(ctx.run(fx.XXP_ZERO_POSITIVE))),
    ]


def _root(ctx):
    pii0 = ctx.run(fx.PII0_CROSSING)
    sq = ctx.squared
    (zero,) = locate_zeros(sq)
    signed = sqrt_signed(sq, zero, TRANSFORM_SAMPLES)
    orig = pii0.eval(signed.t)
    at = int(np.flatnonzero(signed.t == zero.location)[0])
    sdot_a = signed.values[at, 1]
    direct = ctx.run(fx.XXP_ZERO_POSITIVE)
    (dz,) = locate_zeros(direct)
    direct_signed = sqrt_signed(direct, dz, TRANSFORM_SAMPLES)
    return [
        _le("root/pii0_crossing/roundtrip", "root", np.max(np.abs(signed.values[:, 0] - orig[:, 0])),
            ROUNDTRIP_BOUND, "signed root of s^2 vs s"),
        _le("root/pii0_crossing/sdot_limit", "root",
            abs(sdot_a - np.sqrt(zero.second_derivative / 2.0)), ROUNDTRIP_BOUND,
            "s'(a) vs sqrt(S''(a)/2)"),
        _le("root/pii0_crossing/sdot_original", "root", abs(sdot_a - pii0.eval(zero.location)[1]),
            ROUNDTRIP_BOUND, "s'(a) vs the original solution"),
        _le("root/pii0_crossing/residual", "root", residual(signed), RESIDUAL_BOUND,
            "signed root satisfies PII0, flip point included"),
        _le("root/xxp_zero_positive/residual", "root", residual(direct_signed), RESIDUAL_BOUND,
            "signed root of an XX' run started at a zero"),
    ]


def _sigma(ctx):
    neg = ctx.run(fx.BY_NAME["xxp_negative"])
    sig = sqrt_negative(neg, TRANSFORM_SAMPLES)
    direct = ctx.run(fx.XXP_ZERO_NEGATIVE)
    zeros = locate_zeros(direct)
    out = [
        _le("sigma/xxp_negative/pointwise", "sigma", np.max(np.abs(sig.residual)), SIGMA_BOUND,
            "sup |sigma'' - t sigma + 2 sigma^3|, sigma'' from S''"),
        _le("sigma/xxp_negative/residual", "sigma", residual(sig), RESIDUAL_BOUND,
            "finite-difference sigma residual"),
        _raises("sigma/xxp_flat/branch_violation", "sigma",
                lambda: sqrt_negative(ctx.run(fx.BY_NAME["xxp_flat"]), TRANSFORM_SAMPLES)),
    ]
    if zeros and all(z.classification is ZeroClass.ISOLATED_NEGATIVE for z in zeros):
        signed = sqrt_negative(direct, TRANSFORM_SAMPLES, zeros=zeros)
        out.append(_le("sigma/xxp_zero_negative/signed_residual", "sigma", residual(signed),
                       RESIDUAL_BOUND, "sign-changing sigma through a zero of S <= 0"))
    else:
        out.append(_ge("sigma/xxp_zero_negative/signed_residual", "sigma", 0.0, 1.0,
                       "no isolated negative zero located"))
    return out


def _negative_zero_structure(ctx):
    direct = ctx.run(fx.XXP_ZERO_NEGATIVE)
    zeros = locate_zeros(direct)
    rep = check_no_sign_change(direct, zeros)
    return [
        _ge("ne/xxp_zero_negative/isolated_negative", "ne",
            sum(z.classification is ZeroClass.ISOLATED_NEGATIVE for z in zeros), 1,
            "zero of a non-positive XX solution has S''(a) < 0"),
        _le("no_sign_change/xxp_zero_negative", "no_sign_change", len(rep.offending), 0),
    ]


_PRODUCERS = (
    ({"conservation"}, _conservation),
    ({"theorems"}, _x_prime),
    ({"theorems"}, _zero_structure),
    ({"theorems"}, _no_sign_change),
    ({"theorems", "roundtrip"}, _nozero),
    ({"theorems", "roundtrip"}, _square),
    ({"theorems"}, _notroot),
    ({"theorems", "roundtrip"}, _root),
    ({"theorems", "negative_branch"}, _sigma),
    ({"negative_branch"}, _negative_zero_structure),
)


def run_suite(name: str, config: ToleranceConfig | None = None) -> VerificationReport:
    """Run a named suite; the report is deterministic given ``config``."""
    if name != "all" and name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    tol = config or ToleranceConfig()
    ctx = _Context(tol)
    wanted = set(SUITES) if name == "all" else {name}
    cases: dict[str, Case] = {}
    for suites, producer in _PRODUCERS:
        if suites & wanted:
            for case in producer(ctx):
                cases.setdefault(case.id, case)
    tolerances = {
        "integrator": tol.to_dict(),
        "tol_zero": TOL_ZERO,
        "tol_deriv": TOL_DERIV,
        "tol_class": TOL_CLASS,
    }
    return VerificationReport(name, [cases[k] for k in sorted(cases)], tolerances, ctx.stats())


def ensemble_cases(n: int, seed: int, config: ToleranceConfig | None = None) -> list[Case]:
    """Squaring checks on ``n`` random PII0 solutions (not part of any suite).

    For each draw ``s(0), s'(0)`` uniform in [-1, 1] over t in [0, 1/2]: the
    squared path must keep C at zero, and an XX' run from the squared initial
    data must reproduce it.
    """
    from .integrator import integrate
    from .transforms import square_state

    tol = config or ToleranceConfig()
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        s0, sd0 = rng.uniform(-1.0, 1.0, size=2)
        init = Pii0State(0.0, float(s0), float(sd0))
        pii0, _ = integrate(Model.PII0, init, (0.0, 0.5), tol)
        sq = square_trajectory(pii0, TRANSFORM_SAMPLES)
        xxp, _ = integrate(Model.XXPRIME, square_state(init), (0.0, 0.5), tol)
        gap = np.max(np.abs(xxp.eval(sq.t) - sq.values)) / max(1.0, float(np.max(np.abs(sq.values))))
        tag = f"ensemble/{seed}/{k:03d}"
        out.append(_le(f"{tag}/invariant", "square", normalized_c(sq, sq.t).max(), C_SQUARE_BOUND,
                       f"s(0)={s0!r}, s'(0)={sd0!r}"))
        out.append(_le(f"{tag}/xxprime_agrees", "square", gap, 1e-7,
                       "XX' run from squared data vs squared PII0 run"))
    return out
