"""Adaptive Dormand-Prince 5(4) integration with dense output and events.

Also provides an independent fixed-step classical RK4 integrator and the
Richardson protocol used to produce frozen reference values for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    BudgetExceededError,
    OracleInconsistencyError,
    RangeError,
    StepSizeUnderflowError,
    UsageError,
)
from .models import (
    DEFAULT_ETA,
    Model,
    make_state,
    rhs_function,
    second_derivative_function,
    state_type,
)

# Dormand & Prince (1980) tableau.  Dense output is not the usual quartic
# continuous extension but a quintic Hermite interpolant through y, y', y''
# at both step ends (y'' from the models' analytic second derivatives); it is
# C2 across nodes, which keeps finite-difference residuals clean.
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

# PI controller constants (Hairer's defaults for DOPRI5)
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_SAFE = 0.9
_FACMIN_INV = 5.0  # step may shrink at most by 1/5
_FACMAX_INV = 0.1  # and grow at most by 10

EVENT_TOL = 1e-12


@dataclass(frozen=True)
class ToleranceConfig:
    rtol: float = 1e-10
    atol: float = 1e-10
    h_init: float | None = None  # None: automatic starting step
    h_min: float | None = None  # None: 1e-14 * |span|
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise UsageError("rtol and atol must be positive")
        if self.h_min is not None and not self.h_min > 0:
            raise UsageError("h_min must be positive")
        if self.h_init is not None and not self.h_init > 0:
            raise UsageError("h_init must be positive")
        if self.max_steps <= 0:
            raise UsageError("max_steps must be positive")

    def to_dict(self) -> dict:
        return {
            "rtol": self.rtol,
            "atol": self.atol,
            "h_init": self.h_init,
            "h_min": self.h_min,
            "max_steps": self.max_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToleranceConfig":
        return cls(**d)


# observable name -> (state component, models on which it is defined)
_OBSERVABLES = {
    "s-crosses-zero": (0, {Model.PII0}),
    "S-crosses-zero": (0, {Model.XX, Model.XXPRIME}),
    "S_dot-crosses-zero": (1, {Model.XX, Model.XXPRIME}),
}
_ALIASES = {"Ṡ-crosses-zero": "S_dot-crosses-zero", "Sdot-crosses-zero": "S_dot-crosses-zero"}
_DIRECTIONS = {"any": 0, "rising": 1, "falling": -1}


@dataclass(frozen=True)
class EventSpec:
    name: str
    direction: str = "any"
    terminal: bool = False

    def __post_init__(self):
        name = _ALIASES.get(self.name, self.name)
        if name not in _OBSERVABLES:
            raise UsageError(f"unknown event observable {self.name!r}")
        if self.direction not in _DIRECTIONS:
            raise UsageError(f"event direction must be one of {sorted(_DIRECTIONS)}")
        object.__setattr__(self, "name", name)

    @property
    def component(self) -> int:
        return _OBSERVABLES[self.name][0]

    def check_model(self, model: Model) -> None:
        if model not in _OBSERVABLES[self.name][1]:
            raise UsageError(f"event {self.name} is not defined for model {model.value}")

    def accepts(self, direction: int) -> bool:
        want = _DIRECTIONS[self.direction]
        return want == 0 or want == direction

    @classmethod
    def parse(cls, text: str) -> "EventSpec":
        """Parse ``name[:direction[:terminal]]``."""
        parts = text.split(":")
        if not 1 <= len(parts) <= 3:
            raise UsageError(f"bad event spec {text!r}")
        direction = parts[1] if len(parts) > 1 and parts[1] else "any"
        terminal = len(parts) > 2 and parts[2] in ("terminal", "1", "true")
        return cls(parts[0], direction, terminal)


@dataclass(frozen=True)
class EventHit:
    name: str
    t: float
    state: tuple[float, ...]
    direction: int  # +1 rising, -1 falling, in increasing-t sense of the trajectory

    def to_dict(self) -> dict:
        return {"name": self.name, "t": self.t, "state": list(self.state), "direction": self.direction}

    @classmethod
    def from_dict(cls, d: dict) -> "EventHit":
        return cls(d["name"], d["t"], tuple(d["state"]), d["direction"])


def _poly(theta, r):
    # r has shape (..., 6, d): monomial coefficients in theta, lowest first
    th = theta[..., None]
    out = r[..., 5, :]
    for k in range(4, -1, -1):
        out = out * th + r[..., k, :]
    return out


def _poly_dtheta(theta, r):
    th = theta[..., None]
    out = 5.0 * r[..., 5, :]
    for k in range(4, 0, -1):
        out = out * th + k * r[..., k, :]
    return out


def hermite_coeffs(h, y0, d0, dd0, y1, d1, dd1):
    """Quintic in ``theta`` matching value, first and second derivative at both ends."""
    c0, c1, c2 = y0, h * d0, 0.5 * h * h * dd0
    d = y1 - c0 - c1 - c2
    e = h * d1 - c1 - 2.0 * c2
    f = h * h * dd1 - 2.0 * c2
    return np.stack([c0, c1, c2, 10.0 * d - 4.0 * e + 0.5 * f, -15.0 * d + 7.0 * e - f,
                     6.0 * d - 3.0 * e + 0.5 * f])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted steps of one integration plus their dense interpolants.

    Step ``i`` joins node ``i`` to node ``i + 1``; its interpolant is a
    quintic in ``theta = (t - step_t0[i]) / step_h[i]``.
    """

    model: Model
    t_start: float
    t_end: float
    t: np.ndarray
    y: np.ndarray
    step_t0: np.ndarray
    step_h: np.ndarray
    coeffs: np.ndarray
    tol: ToleranceConfig
    stats: dict = field(default_factory=dict)
    truncated: bool = False

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.t)

    @property
    def increasing(self) -> bool:
        return self.t_end >= self.t_start

    @property
    def lo(self) -> float:
        return min(self.t_start, self.t_end)

    @property
    def hi(self) -> float:
        return max(self.t_start, self.t_end)

    @cached_property
    def _asc(self):
        if self.increasing:
            return self.t, self.y, np.arange(len(self.t))
        return self.t[::-1], self.y[::-1], np.arange(len(self.t))[::-1]

    def _locate(self, tq):
        t_asc, _, order = self._asc
        n = len(t_asc)
        if n < 2:
            return np.zeros(tq.shape, dtype=int)
        j = np.clip(np.searchsorted(t_asc, tq, side="right") - 1, 0, n - 2)
        if self.increasing:
            return j
        return n - 2 - j

    def _prepare(self, t):
        tq = np.asarray(t, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        bad = (tq < self.lo) | (tq > self.hi) | ~np.isfinite(tq)
        if bad.any():
            raise RangeError(
                f"t={tq[bad][0]!r} outside trajectory span [{self.lo!r}, {self.hi!r}]"
            )
        return tq, scalar

    def eval(self, t) -> np.ndarray:
        """Dense state at ``t`` (scalar -> shape (d,), array -> shape (n, d))."""
        tq, scalar = self._prepare(t)
        t_asc, y_asc, _ = self._asc
        if len(t_asc) < 2:
            out = np.repeat(y_asc[:1], len(tq), axis=0)
        else:
            i = self._locate(tq)
            theta = (tq - self.step_t0[i]) / self.step_h[i]
            out = _poly(theta, self.coeffs[i])
            pos = np.clip(np.searchsorted(t_asc, tq), 0, len(t_asc) - 1)
            hit = t_asc[pos] == tq
            out[hit] = y_asc[pos[hit]]
        return out[0] if scalar else out

    def derivative(self, t) -> np.ndarray:
        """Time derivative of the dense interpolant."""
        tq, scalar = self._prepare(t)
        if self.n_nodes < 2:
            out = np.zeros((len(tq), self.dim))
        else:
            i = self._locate(tq)
            theta = (tq - self.step_t0[i]) / self.step_h[i]
            out = _poly_dtheta(theta, self.coeffs[i]) / self.step_h[i][:, None]
        return out[0] if scalar else out

    def scan_grid(self, per_step: int = 4) -> np.ndarray:
        """Ascending sample times: every node plus ``per_step - 1`` interior points per step."""
        t_asc = self._asc[0]
        if len(t_asc) < 2:
            return t_asc.copy()
        frac = np.arange(per_step) / per_step
        grid = (t_asc[:-1, None] + frac[None, :] * np.diff(t_asc)[:, None]).ravel()
        return np.append(grid, t_asc[-1])

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        ts = np.linspace(self.t_start, self.t_end, n)
        ts[-1] = self.t_end
        return ts, self.eval(ts)

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "truncated": self.truncated,
            "tol": self.tol.to_dict(),
            "stats": dict(self.stats),
            "nodes": {"t": self.t.tolist(), "y": self.y.tolist()},
            "steps": {
                "t0": self.step_t0.tolist(),
                "h": self.step_h.tolist(),
                "coeffs": self.coeffs.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        model = Model.parse(d["model"])
        dim = model.dim
        return cls(
            model=model,
            t_start=float(d["t_start"]),
            t_end=float(d["t_end"]),
            t=np.asarray(d["nodes"]["t"], dtype=float),
            y=np.asarray(d["nodes"]["y"], dtype=float).reshape(-1, dim),
            step_t0=np.asarray(d["steps"]["t0"], dtype=float),
            step_h=np.asarray(d["steps"]["h"], dtype=float),
            coeffs=np.asarray(d["steps"]["coeffs"], dtype=float).reshape(-1, 6, dim),
            tol=ToleranceConfig.from_dict(d["tol"]),
            stats=dict(d.get("stats", {})),
            truncated=bool(d.get("truncated", False)),
        )


def evaluate_dense(traj, t: float):
    """Dense state of ``traj`` at ``t`` as the model's state dataclass."""
    return make_state(traj.model, t, traj.eval(float(t)))


# ---------------------------------------------------------------------------
# adaptive integration
# ---------------------------------------------------------------------------

def _rms(v):
    return math.sqrt(float(np.mean(v * v)))


def _initial_step(F, t0, y0, f0, dirn, span, tol):
    sk = tol.atol + tol.rtol * np.abs(y0)
    d0, d1 = _rms(y0 / sk), _rms(f0 / sk)
    h0 = 1e-6 if d0 < 1e-10 or d1 < 1e-10 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = F(t0 + dirn * h0, y0 + dirn * h0 * f0)
    d2 = _rms((f1 - f0) / sk) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100 * h0, h1, span)


class _Builder:
    """Accumulates accepted steps; turns into a Trajectory."""

    def __init__(self, model, t0, y0, tol):
        self.model, self.tol = model, tol
        self.t0 = t0
        self.ts, self.ys = [t0], [y0]
        self.st0, self.sh, self.cs = [], [], []
        self.stats = {"n_accepted": 0, "n_rejected": 0, "n_fev": 0}

    def append(self, t_from, h, r, t_new, y_new):
        self.st0.append(t_from)
        self.sh.append(h)
        self.cs.append(r)
        self.ts.append(t_new)
        self.ys.append(y_new)

    def cut_last(self, t_hit):
        """Truncate the last step at ``t_hit`` inside it."""
        r, t0, h = self.cs[-1], self.st0[-1], self.sh[-1]
        y = _poly(np.array([(t_hit - t0) / h]), r[None])[0]
        self.ts[-1], self.ys[-1] = t_hit, y
        return y

    def cut_to_node(self, k):
        del self.ts[k + 1:], self.ys[k + 1:], self.st0[k:], self.sh[k:], self.cs[k:]

    def build(self, truncated=False) -> Trajectory:
        d = len(self.ys[0])
        return Trajectory(
            model=self.model,
            t_start=self.t0,
            t_end=self.ts[-1],
            t=np.array(self.ts, dtype=float),
            y=np.array(self.ys, dtype=float).reshape(-1, d),
            step_t0=np.array(self.st0, dtype=float),
            step_h=np.array(self.sh, dtype=float),
            coeffs=np.array(self.cs, dtype=float).reshape(-1, 6, d),
            tol=self.tol,
            stats=dict(self.stats),
            truncated=truncated,
        )


def bisect_sign_change(g, t_lo, t_hi, sign_lo):
    """Bisect a sign change of ``g`` between ``t_lo`` and ``t_hi`` (either order)."""
    while abs(t_hi - t_lo) > EVENT_TOL * max(1.0, abs(t_lo)):
        mid = 0.5 * (t_lo + t_hi)
        if mid == t_lo or mid == t_hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if np.sign(gm) == sign_lo:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


def _integrate_one(model, y0, t0, t1, tol, events, eta):
    f = rhs_function(model, eta)
    g = second_derivative_function(model, eta)

    def F(t, y):
        return np.array(f(t, y), dtype=float)

    dirn = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    h_min = tol.h_min if tol.h_min is not None else 1e-14 * span
    b = _Builder(model, t0, y0, tol)
    hits: list[EventHit] = []
    # per event: last nonzero sign of the observable, and a pending exact-zero node
    last_sign = [float(np.sign(y0[e.component])) for e in events]
    zero_node: list[int | None] = [None] * len(events)

    t, y = t0, y0
    k1 = F(t, y)
    dd = np.array(g(t, y), dtype=float)
    b.stats["n_fev"] += 1
    h = tol.h_init if tol.h_init is not None else _initial_step(F, t, y, k1, dirn, span, tol)
    b.stats["n_fev"] += 1
    h = min(h, span)
    facold = 1e-4
    rejected = False

    while True:
        last = dirn * (t + dirn * h - t1) >= 0.0
        if last:
            h = abs(t1 - t)
        if h < h_min and not last:
            raise StepSizeUnderflowError(
                f"step size {h:.3e} below h_min={h_min:.3e} at t={t!r}; "
                "solution probably blows up nearby",
                partial=b.build(truncated=True),
            )
        if b.stats["n_accepted"] + b.stats["n_rejected"] >= tol.max_steps:
            raise BudgetExceededError(
                f"max_steps={tol.max_steps} exceeded at t={t!r}", partial=b.build(truncated=True)
            )
        hs = dirn * h
        with np.errstate(all="ignore"):
            k2 = F(t + _C2 * hs, y + hs * _A21 * k1)
            k3 = F(t + _C3 * hs, y + hs * (_A31 * k1 + _A32 * k2))
            k4 = F(t + _C4 * hs, y + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3))
            k5 = F(t + _C5 * hs, y + hs * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
            k6 = F(t + hs, y + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
            y1 = y + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = F(t + hs, y1)
            b.stats["n_fev"] += 6
            e = hs * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
            sk = tol.atol + tol.rtol * np.maximum(np.abs(y), np.abs(y1))
            err = _rms(e / sk)

        if not math.isfinite(err) or not np.all(np.isfinite(y1)):
            b.stats["n_rejected"] += 1
            h *= 1.0 / _FACMIN_INV
            rejected = True
            continue

        fac11 = err**_EXPO1
        if err > 1.0:
            b.stats["n_rejected"] += 1
            h = h / min(_FACMIN_INV, fac11 / _SAFE)
            rejected = True
            continue

        # accepted
        b.stats["n_accepted"] += 1
        t_new = t1 if last else t + hs
        dd1 = np.array(g(t_new, y1), dtype=float)
        r = hermite_coeffs(hs, y, k1, dd, y1, k7, dd1)
        b.append(t, hs, r, t_new, y1)
        node_idx = len(b.ts) - 1

        stop = False
        for j, ev in enumerate(events):
            g1 = y1[ev.component]
            s1 = float(np.sign(g1))
            if s1 == 0.0:
                if zero_node[j] is None:
                    zero_node[j] = node_idx
                continue
            if last_sign[j] != 0.0 and s1 != last_sign[j]:
                direction = int(s1 * dirn)
                if zero_node[j] is not None:
                    k = zero_node[j]
                    t_hit, y_hit = b.ts[k], b.ys[k]
                else:
                    comp, t_from, h_step = ev.component, t, hs

                    def observable(tt, r=r, comp=comp, t_from=t_from, h_step=h_step):
                        return _poly(np.array([(tt - t_from) / h_step]), r[None])[0][comp]

                    t_hit = bisect_sign_change(observable, t, t_new, last_sign[j])
                    y_hit = _poly(np.array([(t_hit - t) / hs]), r[None])[0]
                if ev.accepts(direction):
                    hits.append(EventHit(ev.name, float(t_hit), tuple(map(float, y_hit)), direction))
                    if ev.terminal:
                        if zero_node[j] is not None:
                            b.cut_to_node(zero_node[j])
                        else:
                            b.cut_last(t_hit)
                        stop = True
            last_sign[j] = s1
            zero_node[j] = None
            if stop:
                break
        if stop:
            b.stats["stopped_by_event"] = hits[-1].name
            break

        facold = max(err, 1e-4)
        fac = fac11 / facold**_BETA
        fac = max(_FACMAX_INV, min(_FACMIN_INV, fac / _SAFE))
        h_new = h / fac
        if rejected:
            h_new = min(h_new, h)
        rejected = False
        t, y, k1, dd = t_new, y1, k7, dd1
        h = min(h_new, span)
        if last:
            break

    return b.build(), hits


def _flip_hits(hits):
    return [EventHit(e.name, e.t, e.state, -e.direction) for e in hits]


def _stitch(left: Trajectory, right: Trajectory, t_start, t_end) -> Trajectory:
    """Join ``left`` (integrated from the initial point towards t_start) and
    ``right`` (towards t_end) into one trajectory running t_start -> t_end."""
    stats = {k: left.stats.get(k, 0) + right.stats.get(k, 0)
             for k in ("n_accepted", "n_rejected", "n_fev")}
    return Trajectory(
        model=left.model,
        t_start=left.t_end,
        t_end=right.t_end,
        t=np.concatenate([left.t[::-1], right.t[1:]]),
        y=np.concatenate([left.y[::-1], right.y[1:]]),
        step_t0=np.concatenate([left.step_t0[::-1], right.step_t0]),
        step_h=np.concatenate([left.step_h[::-1], right.step_h]),
        coeffs=np.concatenate([left.coeffs[::-1], right.coeffs]),
        tol=left.tol,
        stats=stats,
        truncated=left.truncated or right.truncated,
    )


def integrate(
    model,
    init,
    t_span: Sequence[float],
    tol: ToleranceConfig | None = None,
    events: Sequence[EventSpec] = (),
    eta: float = DEFAULT_ETA,
) -> tuple[Trajectory, list[EventHit]]:
    """Integrate ``model`` from ``init`` over ``t_span``.

    ``init.t`` is normally ``t_span[0]``.  If it lies strictly inside the span
    the solution is continued in both directions and the pieces are joined
    into one trajectory running from ``t_span[0]`` to ``t_span[1]``.

    Returns the trajectory and the list of event hits, ordered along it.
    """
    model = Model.parse(model)
    tol = tol or ToleranceConfig()
    if model is Model.SIGMA:
        raise UsageError("the sigma equation is not integrated directly; use XX' and sqrt_negative")
    if not isinstance(init, state_type(model)):
        raise UsageError(f"initial state {init!r} does not match model {model.value}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1 or not (math.isfinite(t0) and math.isfinite(t1)):
        raise UsageError("t_span must have two distinct finite endpoints")
    events = list(events)
    for ev in events:
        ev.check_model(model)
    y0 = init.as_array()
    ti = float(init.t)

    if ti == t0:
        return _integrate_one(model, y0, t0, t1, tol, events, eta)
    if not min(t0, t1) < ti < max(t0, t1):
        raise UsageError(f"initial time {ti!r} outside t_span {(t0, t1)!r}")

    # the left piece runs backwards in time: its rising/falling labels swap
    back_events = [EventSpec(e.name, {"rising": "falling", "falling": "rising"}.get(e.direction, "any"),
                             e.terminal) for e in events]
    left, left_hits = _integrate_one(model, y0, ti, t0, tol, back_events, eta)
    right, right_hits = _integrate_one(model, y0, ti, t1, tol, events, eta)
    traj = _stitch(left, right, t0, t1)

    hits = _flip_hits(left_hits[::-1])
    for ev in events:
        if y0[ev.component] != 0.0:
            continue
        sl = _first_nonzero_sign(left.y[:, ev.component])
        sr = _first_nonzero_sign(right.y[:, ev.component])
        if sl and sr and sl != sr:
            direction = int(sr * (1 if t1 > t0 else -1))
            if ev.accepts(direction):
                hits.append(EventHit(ev.name, ti, tuple(map(float, y0)), direction))
    hits.extend(right_hits)
    return traj, hits


def _first_nonzero_sign(values):
    nz = np.flatnonzero(values != 0.0)
    return float(np.sign(values[nz[0]])) if len(nz) else 0.0


# ---------------------------------------------------------------------------
# fixed-step oracle
# ---------------------------------------------------------------------------

def oracle_integrate(model, init, t_span: Sequence[float], h: float, eta: float = DEFAULT_ETA):
    """Classical fourth-order Runge-Kutta with fixed step ``h``; returns the end state."""
    model = Model.parse(model)
    f = rhs_function(model, eta)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if float(init.t) != t0:
        raise UsageError("oracle_integrate starts at t_span[0]; init.t must equal it")
    span = abs(t1 - t0)
    n = round(span / h)
    if n < 1 or abs(n * h - span) > 1e-9 * max(1.0, span):
        raise UsageError(f"step {h!r} does not divide span {span!r}")
    hh = (t1 - t0) / n
    y = tuple(float(v) for v in init.as_array())
    dim = len(y)
    for i in range(n):
        t = t0 + i * hh
        k1 = f(t, y)
        k2 = f(t + 0.5 * hh, tuple(y[j] + 0.5 * hh * k1[j] for j in range(dim)))
        k3 = f(t + 0.5 * hh, tuple(y[j] + 0.5 * hh * k2[j] for j in range(dim)))
        k4 = f(t + hh, tuple(y[j] + hh * k3[j] for j in range(dim)))
        y = tuple(y[j] + hh / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) for j in range(dim))
    return make_state(model, t1, y)


@dataclass(frozen=True)
class OracleReference:
    state: object
    extrapolated: tuple[tuple[float, ...], tuple[float, ...]]
    agreement: float  # relative max-norm gap between the two extrapolations


def richardson_reference(model, init, t_span, h: float = 1e-4, agree: float = 1e-10,
                         eta: float = DEFAULT_ETA) -> OracleReference:
    """Reference end state from RK4 runs at ``h, h/2, h/4``.

    Two Richardson extrapolations, from ``(h, h/2)`` and ``(h/2, h/4)``, must
    agree to ``agree`` in relative max-norm; the finer one is returned.
    """
    y = [oracle_integrate(model, init, t_span, h / 2**k, eta).as_array() for k in range(3)]
    e1 = (16.0 * y[1] - y[0]) / 15.0
    e2 = (16.0 * y[2] - y[1]) / 15.0
    scale = float(np.max(np.abs(e2)))
    gap = float(np.max(np.abs(e1 - e2)))
    rel = gap / scale if scale > 0 else gap
    if rel > agree:
        raise OracleInconsistencyError(
            f"Richardson extrapolations disagree: relative gap {rel:.3e} > {agree:.1e}"
        )
    return OracleReference(
        make_state(model, t_span[1], e2), (tuple(e1.tolist()), tuple(e2.tolist())), rel
    )
