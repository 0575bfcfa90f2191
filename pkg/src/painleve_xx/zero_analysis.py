"""Location and classification of zeros.

A solution of PII0 crosses zero transversally, so its zeros are found as
sign changes.  A solution of XX touches zero quadratically and never
changes sign there, so a sign-change search on S finds nothing; instead the
minima of |S| are located as sign changes of S' and accepted as zeros when
|S| is small enough there.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .integrator import bisect_sign_change
from .models import Model, f_xxprime
from .paths import as_dense, xx_columns

TOL_ZERO = 1e-9
TOL_DERIV = 1e-7
TOL_CLASS = 1e-6


class ZeroClass(str, enum.Enum):
    ISOLATED_POSITIVE = "isolated_positive"
    ISOLATED_NEGATIVE = "isolated_negative"
    SIGN_CHANGE = "sign_change"
    DEGENERATE_FLAGGED = "degenerate_flagged"


@dataclass(frozen=True)
class ZeroEvent:
    location: float
    model: Model
    value_checks: tuple[float, ...]  # (|S|, |S'|) for XX data, (|s|,) otherwise
    classification: ZeroClass
    scale: float = 1.0
    second_derivative: float | None = None  # S''(a), XX data
    third_derivative: float | None = None  # S'''(a) from XX', XX data
    first_derivative: float | None = None  # s'(a), PII0 / sigma data
    span: tuple[float, float] | None = None  # set when the event covers an identically-zero stretch

    @property
    def is_isolated(self) -> bool:
        return self.classification in (ZeroClass.ISOLATED_POSITIVE, ZeroClass.ISOLATED_NEGATIVE)

    def to_dict(self) -> dict:
        return {
            "location": self.location,
            "model": self.model.value,
            "value_checks": list(self.value_checks),
            "classification": self.classification.value,
            "scale": self.scale,
            "second_derivative": self.second_derivative,
            "third_derivative": self.third_derivative,
            "first_derivative": self.first_derivative,
            "span": list(self.span) if self.span else None,
        }


def _brackets(t, g):
    """Sign changes of sampled ``g``: ``('exact', t_i)`` or ``('bracket', t_i, t_j)``."""
    sg = np.sign(g)
    nz = np.flatnonzero(sg != 0)
    out = []
    for i, j in zip(nz[:-1], nz[1:]):
        if sg[i] == sg[j]:
            continue
        if j == i + 1:
            out.append(("bracket", t[i], t[j], sg[i]))
        else:
            out.append(("exact", t[(i + j + 1) // 2]))
    return out


def _roots(dense, t, g_all, component):
    roots = []
    for br in _brackets(t, g_all):
        if br[0] == "exact":
            roots.append(float(br[1]))
        else:
            _, lo, hi, s_lo = br
            roots.append(float(bisect_sign_change(lambda tt: dense.eval(tt)[component], lo, hi, s_lo)))
    return roots


def classify_zero(event: ZeroEvent, tol_class: float = TOL_CLASS) -> ZeroClass:
    """Classify by the sign of S''(a) (XX data) or by s'(a) (PII0 data).

    For XX data a zero with |S''(a)| <= tol_class cannot be an isolated zero,
    so it is flagged as degenerate rather than accepted.
    """
    if event.model.is_xx_type:
        c = event.second_derivative
        if c is not None and c > tol_class:
            return ZeroClass.ISOLATED_POSITIVE
        if c is not None and c < -tol_class:
            return ZeroClass.ISOLATED_NEGATIVE
        return ZeroClass.DEGENERATE_FLAGGED
    v = event.first_derivative
    if v is not None and abs(v) > tol_class:
        return ZeroClass.SIGN_CHANGE
    return ZeroClass.DEGENERATE_FLAGGED


def locate_zeros(obj, tol_zero: float = TOL_ZERO, tol_deriv: float = TOL_DERIV,
                 tol_class: float = TOL_CLASS) -> list[ZeroEvent]:
    """Zeros of the first component of a trajectory or path.

    All tolerances are relative to ``scale = max(1, sup |first component|)``.
    """
    dense = as_dense(obj)
    model = dense.model
    grid = dense.scan_grid()
    vals = dense.eval(grid)
    scale = max(1.0, float(np.max(np.abs(vals[:, 0]))))
    covering = np.all(np.abs(vals[:, :2]) <= tol_zero * scale)

    if model.is_xx_type:
        if covering:
            return [ZeroEvent(0.5 * (dense.lo + dense.hi), model, (0.0, 0.0),
                              ZeroClass.DEGENERATE_FLAGGED, scale, 0.0, 0.0,
                              span=(dense.lo, dense.hi))]
        cands = _roots(dense, grid, vals[:, 1], 1)
        for k in (0, -1):
            if abs(vals[k, 0]) <= tol_zero * scale and abs(vals[k, 1]) <= tol_deriv * scale:
                cands.append(float(grid[k]))
        events = []
        for a in sorted(set(cands)):
            S, Sd, Sdd = (float(x[0]) for x in xx_columns(dense, a))
            if abs(S) > tol_zero * scale:
                continue
            Sddd = f_xxprime(a, (S, Sd, Sdd))[2]
            ev = ZeroEvent(a, model, (abs(S), abs(Sd)), ZeroClass.DEGENERATE_FLAGGED, scale,
                           second_derivative=Sdd, third_derivative=Sddd)
            events.append(_with_class(ev, classify_zero(ev, tol_class * scale)))
        return events

    if covering:
        return [ZeroEvent(0.5 * (dense.lo + dense.hi), model, (0.0,),
                          ZeroClass.DEGENERATE_FLAGGED, scale, first_derivative=0.0,
                          span=(dense.lo, dense.hi))]
    events = []
    for a in _roots(dense, grid, vals[:, 0], 0):
        s, sd = (float(x) for x in dense.eval(a)[:2])
        ev = ZeroEvent(a, model, (abs(s),), ZeroClass.DEGENERATE_FLAGGED, scale, first_derivative=sd)
        events.append(_with_class(ev, classify_zero(ev, tol_class * scale)))
    return events


def _with_class(ev: ZeroEvent, cls: ZeroClass) -> ZeroEvent:
    return ZeroEvent(**{**ev.__dict__, "classification": cls})


@dataclass
class NoSignChangeReport:
    ok: bool
    offending: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def check_no_sign_change(obj, events, n_per_gap: int = 64) -> NoSignChangeReport:
    """Check that sign(S) is constant between zeros and the same on both sides of each.

    ``n_per_gap`` interior points are sampled in every gap between
    consecutive event locations (and the span ends).
    """
    dense = as_dense(obj)
    cuts = sorted(e.location for e in events if e.span is None)
    edges = [dense.lo, *cuts, dense.hi]
    offending = []
    gap_signs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            gap_signs.append(None)
            continue
        ts = np.linspace(lo, hi, n_per_gap + 2)[1:-1]
        signs = np.unique(np.sign(dense.eval(ts)[:, 0]))
        if len(signs) > 1:
            offending.append({"gap": (lo, hi), "reason": "sign changes inside gap"})
            gap_signs.append(None)
        else:
            gap_signs.append(float(signs[0]))
    for k, a in enumerate(cuts):
        left, right = gap_signs[k], gap_signs[k + 1]
        if left is not None and right is not None and left != right:
            offending.append({"gap": (edges[k], edges[k + 2]), "zero": a,
                              "reason": f"sign flips from {left:+.0f} to {right:+.0f} at t={a!r}"})
    return NoSignChangeReport(not offending, offending)


__all__ = [
    "NoSignChangeReport",
    "TOL_CLASS",
    "TOL_DERIV",
    "TOL_ZERO",
    "ZeroClass",
    "ZeroEvent",
    "check_no_sign_change",
    "classify_zero",
    "locate_zeros",
]
