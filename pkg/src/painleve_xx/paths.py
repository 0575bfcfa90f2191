"""Dense paths derived from trajectories, and sampled views of them.

A transform of a trajectory is kept as a :class:`DensePath`: a vectorised
function of ``t`` composed on top of the trajectory's dense output.  What
the transforms hand back to callers is a :class:`SampledPath`, a table of
samples that keeps a reference to the dense path it came from so zero
location and finite-difference residuals can still query arbitrary times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import RangeError, UsageError
from .models import Model


@dataclass(frozen=True, eq=False)
class DensePath:
    model: Model
    t_start: float
    t_end: float
    func: Callable[[np.ndarray], np.ndarray]
    grid: np.ndarray | None = None
    op: str = "function"
    params: dict = field(default_factory=dict)
    source: object = None

    @classmethod
    def from_function(cls, model, span, func, n_grid: int = 2001) -> "DensePath":
        model = Model.parse(model)
        lo, hi = sorted(map(float, span))
        return cls(model, float(span[0]), float(span[1]), func, np.linspace(lo, hi, n_grid))

    @property
    def lo(self) -> float:
        return min(self.t_start, self.t_end)

    @property
    def hi(self) -> float:
        return max(self.t_start, self.t_end)

    def eval(self, t) -> np.ndarray:
        tq = np.asarray(t, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        if ((tq < self.lo) | (tq > self.hi)).any():
            raise RangeError(f"t outside path span [{self.lo!r}, {self.hi!r}]")
        out = np.asarray(self.func(tq), dtype=float)
        return out[0] if scalar else out

    def scan_grid(self) -> np.ndarray:
        if self.grid is not None:
            return self.grid
        return as_dense(self.source).scan_grid()


@dataclass(frozen=True, eq=False)
class SampledPath:
    model: Model
    t: np.ndarray
    values: np.ndarray
    residual: np.ndarray | None = None
    dense: object = None
    meta: dict = field(default_factory=dict)

    @property
    def columns(self) -> tuple[str, ...]:
        cols = ("t",) + self.model.columns
        return cols + ("residual",) if self.residual is not None else cols

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def rows(self) -> np.ndarray:
        parts = [self.t[:, None], self.values]
        if self.residual is not None:
            parts.append(self.residual[:, None])
        return np.hstack(parts)

    def eval(self, t):
        return as_dense(self).eval(t)


def as_dense(obj):
    """Anything with ``eval``/``scan_grid``: trajectories, dense paths, sampled paths.

    A sampled path without a dense source falls back to linear interpolation
    between its samples.
    """
    if isinstance(obj, SampledPath):
        if obj.dense is not None:
            return obj.dense
        ts, vals = obj.t, obj.values
        order = np.argsort(ts)
        ts_a, vals_a = ts[order], vals[order]

        def interp(tq):
            return np.stack([np.interp(tq, ts_a, vals_a[:, k]) for k in range(vals.shape[1])], axis=-1)

        return DensePath(obj.model, obj.t_start, obj.t_end, interp, ts_a, op="interp")
    if hasattr(obj, "eval") and hasattr(obj, "scan_grid"):
        return obj
    raise UsageError(f"{type(obj).__name__} has no dense evaluation")


def xx_columns(obj, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(S, S', S'')`` along an XX or XX' path at times ``t``.

    For XX-model data S'' comes from XX itself and is infinite where S = 0.
    """
    d = as_dense(obj)
    v = np.atleast_2d(d.eval(np.atleast_1d(t)))
    tq = np.atleast_1d(np.asarray(t, dtype=float))
    if d.model is Model.XXPRIME:
        return v[:, 0], v[:, 1], v[:, 2]
    if d.model is Model.XX:
        S, Sd = v[:, 0], v[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            Sdd = Sd * Sd / (2.0 * S) + 4.0 * S * S + 2.0 * tq * S
        return S, Sd, Sdd
    raise UsageError(f"model {d.model.value} does not carry XX data")


# five-point and six-point one-sided stencils for the second derivative, O(delta^4)
_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_FORWARD = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0


def second_derivative(obj, t, component: int = 0, delta: float = 2e-3) -> np.ndarray:
    """Fourth-order finite-difference second derivative of one component.

    Central where the stencil fits inside the span, one-sided near the ends.
    """
    d = as_dense(obj)
    tq = np.atleast_1d(np.asarray(t, dtype=float))
    delta = min(delta, (d.hi - d.lo) / 8.0)
    out = np.empty_like(tq)
    central = (tq - 2 * delta >= d.lo) & (tq + 2 * delta <= d.hi)
    fwd = ~central & (tq - 2 * delta < d.lo)
    bwd = ~central & ~fwd
    if central.any():
        offs = np.arange(-2, 3) * delta
        vals = d.eval((tq[central, None] + offs).ravel())[:, component].reshape(-1, 5)
        out[central] = vals @ _CENTRAL / delta**2
    for mask, sgn in ((fwd, 1.0), (bwd, -1.0)):
        if mask.any():
            offs = sgn * np.arange(6) * delta
            vals = d.eval((tq[mask, None] + offs).ravel())[:, component].reshape(-1, 6)
            out[mask] = vals @ _FORWARD / delta**2
    return out


def first_derivative(obj, t, component: int = 0, delta: float = 2e-3) -> np.ndarray:
    """Fourth-order central first derivative, one-sided near the ends."""
    d = as_dense(obj)
    tq = np.atleast_1d(np.asarray(t, dtype=float))
    delta = min(delta, (d.hi - d.lo) / 8.0)
    out = np.empty_like(tq)
    central = (tq - 2 * delta >= d.lo) & (tq + 2 * delta <= d.hi)
    if central.any():
        offs = np.arange(-2, 3) * delta
        vals = d.eval((tq[central, None] + offs).ravel())[:, component].reshape(-1, 5)
        out[central] = vals @ (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0) / delta
    rest = ~central
    if rest.any():
        # one-sided five-point formula
        sgn = np.where(tq[rest] - 2 * delta < d.lo, 1.0, -1.0)
        offs = sgn[:, None] * np.arange(5) * delta
        vals = d.eval((tq[rest, None] + offs).ravel())[:, component].reshape(-1, 5)
        w = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        out[rest] = sgn * (vals @ w) / delta
    return out
