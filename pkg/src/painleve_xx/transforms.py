"""Maps between solutions of PII0, XX and the negative-branch equation.

* squaring takes a PII0 solution ``s`` to the XX solution ``S = s^2``,
  zeros included;
* the positive root ``+sqrt(S)`` of a strictly positive XX solution solves
  PII0, but fails at a zero of S;
* across an isolated zero of a non-negative XX solution the root must flip
  sign to stay a PII0 solution;
* ``sigma = sqrt(-S)`` of a strictly negative XX solution solves
  ``sigma'' = t sigma - 2 sigma^3``.

Results are :class:`~painleve_xx.paths.SampledPath` objects carrying a dense
view of the transformed solution.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import BranchViolationError, UsageError, WrongSignError
from .models import Model, Pii0State, XxPrimeState
from .paths import DensePath, SampledPath, as_dense, second_derivative, xx_columns
from .zero_analysis import TOL_ZERO, ZeroEvent, locate_zeros

# below |root| = ROOT_SWITCH * sqrt(scale) the root's derivative is taken
# from the stable limit formula instead of S' / (2 root)
ROOT_SWITCH = 1e-3
BUMP_WIDTH = 0.25


def _bump(h, width):
    """``(1 - (h/W)^2)^4`` on ``|h| < W`` and its first two derivatives."""
    u = np.clip(h / width, -1.0, 1.0)
    v = 1.0 - u * u
    w = v**4
    wd = -8.0 * u * v**3 / width
    wdd = (48.0 * u * u * v**2 - 8.0 * v**3) / width**2
    return w, wd, wdd


def square_state(p: Pii0State) -> XxPrimeState:
    s, sd, t = p.s, p.s_dot, p.t
    return XxPrimeState(t, s * s, 2.0 * s * sd, 2.0 * s * (2.0 * s**3 + t * s) + 2.0 * sd * sd)


def _square_arrays(t, v):
    s, sd = v[:, 0], v[:, 1]
    return np.stack([s * s, 2.0 * s * sd, 2.0 * s * (2.0 * s**3 + t * s) + 2.0 * sd * sd], axis=-1)


def _sample_times(dense, samples: int, extra: Iterable[float] = ()) -> np.ndarray:
    if samples < 2:
        raise UsageError("need at least 2 samples")
    ts = np.linspace(dense.t_start, dense.t_end, samples)
    ts[-1] = dense.t_end
    extra = [a for a in extra if dense.lo <= a <= dense.hi]
    if extra:
        ts = np.unique(np.concatenate([ts, extra]))
        if dense.t_end < dense.t_start:
            ts = ts[::-1]
    return ts


def square_trajectory(traj, samples: int = 201) -> SampledPath:
    """Sample ``S = s^2`` (as XX' data) along a PII0 trajectory or path.

    The residual column holds the conserved quantity C at each sample.
    """
    src = as_dense(traj)
    if src.model is not Model.PII0:
        raise UsageError(f"square expects a PII0 solution, got {src.model.value}")
    dense = DensePath(Model.XXPRIME, src.t_start, src.t_end,
                      lambda tq: _square_arrays(tq, np.atleast_2d(src.eval(tq))),
                      op="square", source=src)
    ts = _sample_times(dense, samples)
    vals = dense.eval(ts)
    c = 2 * vals[:, 0] * vals[:, 2] - vals[:, 1] ** 2 - 8 * vals[:, 0] ** 3 - 4 * ts * vals[:, 0] ** 2
    return SampledPath(Model.XXPRIME, ts, vals, c, dense, {"op": "square"})


def _require_xx(obj):
    dense = as_dense(obj)
    if not dense.model.is_xx_type:
        raise UsageError(f"expected an XX or XX' solution, got {dense.model.value}")
    return dense


def _first_bad(ts, mask):
    idx = np.flatnonzero(mask)
    return float(ts[idx[0]]) if len(idx) else None


def _check_strict(dense, ts, S, branch):
    """Reject samples on the wrong side of zero and any zero between samples."""
    bad = _first_bad(ts, branch * S <= 0.0)
    if bad is not None:
        raise BranchViolationError(
            f"S has the wrong sign for this root at t={bad!r} (S={float(S[ts == bad][0])!r})", bad
        )
    zeros = locate_zeros(dense)
    if zeros:
        a = zeros[0].location
        raise BranchViolationError(f"S touches zero at t={a!r}; a fixed-sign root is not "
                                   "differentiable there, use the signed root", a)


def sqrt_positive(traj, samples: int = 201) -> SampledPath:
    """``s = +sqrt(S)``, ``s' = S' / (2 s)`` on a strictly positive XX solution."""
    dense = _require_xx(traj)
    ts = _sample_times(dense, samples)
    S, Sd, Sdd = xx_columns(dense, ts)
    _check_strict(dense, ts, S, +1.0)
    return _fixed_sign_root(dense, ts, +1.0)


def sqrt_negative(traj, samples: int = 201, zeros: ZeroEvent | Iterable[ZeroEvent] | None = None,
                  negate: bool = False) -> SampledPath:
    """``sigma = sqrt(-S)`` on a strictly negative XX solution.

    With ``zeros`` given, the non-positive case with isolated zeros is
    handled by the sign-flipping root of ``-S`` instead.
    """
    dense = _require_xx(traj)
    if zeros is not None:
        return _signed_root(dense, _as_list(zeros), samples, -1.0, negate)
    ts = _sample_times(dense, samples)
    S, _, _ = xx_columns(dense, ts)
    _check_strict(dense, ts, S, -1.0)
    out = _fixed_sign_root(dense, ts, -1.0)
    if negate:
        out = negate_path(out)
    return out


def _fixed_sign_root(dense, ts, branch):
    model = Model.PII0 if branch > 0 else Model.SIGMA

    def func(tq):
        S, Sd, _ = xx_columns(dense, tq)
        r = np.sqrt(branch * S)
        return np.stack([r, branch * Sd / (2.0 * r)], axis=-1)

    out_dense = DensePath(model, dense.t_start, dense.t_end, func,
                          op="sqrt-pos" if branch > 0 else "sqrt-neg", source=dense)
    vals = out_dense.eval(ts)
    S, Sd, Sdd = xx_columns(dense, ts)
    r, rd = vals[:, 0], vals[:, 1]
    # r'' from S'' = branch * (2 r r'' + 2 r'^2)
    rdd = (branch * Sdd - 2.0 * rd * rd) / (2.0 * r)
    residual = rdd - _root_rhs(model, ts, r)
    return SampledPath(model, ts, vals, residual, out_dense, {"op": out_dense.op})


def _root_rhs(model, t, r):
    if model is Model.PII0:
        return 2.0 * r**3 + t * r
    return t * r - 2.0 * r**3


def _as_list(zeros):
    if isinstance(zeros, ZeroEvent):
        return [zeros]
    return list(zeros)


def sqrt_signed(traj, zero: ZeroEvent | Iterable[ZeroEvent], samples: int = 201,
                negate: bool = False) -> SampledPath:
    """PII0 solution through an isolated zero of a non-negative XX solution.

    Takes ``-sqrt(S)`` left of the zero and ``+sqrt(S)`` right of it; with
    ``negate`` the mirrored solution.  Several zeros flip the sign at each in
    turn, which goes beyond the single-zero case and is flagged in ``meta``.
    """
    dense = _require_xx(traj)
    return _signed_root(dense, _as_list(zero), samples, +1.0, negate)


def _signed_root(dense, zeros, samples, branch, negate):
    """Sign-flipping root of ``Q = branch * S`` at the given zeros.

    Away from the zeros ``r' = Q' / (2 r)``.  Near a zero that quotient is
    0/0, so ``r'`` comes from ``r'^2 = Q'' / 2 - 2 branch Q^2 - t Q`` (exact
    on solutions of XX), with the sign it has just right of the zero.
    """
    if not zeros:
        raise UsageError("signed root needs at least one zero")
    zeros = sorted(zeros, key=lambda z: z.location)
    for z in zeros:
        c = z.second_derivative
        if c is None or not branch * c > 0:
            what = "positive" if branch > 0 else "negative"
            raise WrongSignError(
                f"zero at t={z.location!r} has S''={c!r}; the signed root needs S'' {what} "
                f"({'use the negative branch' if branch > 0 else 'use sqrt_signed'})",
                z.location,
            )
        if not dense.lo <= z.location <= dense.hi:
            raise UsageError(f"flip location {z.location!r} outside the trajectory span")

    locs = np.array([z.location for z in zeros])
    half_widths = np.array([ROOT_SWITCH / np.sqrt(branch * z.second_derivative / 2.0) for z in zeros])
    limit_rd = np.array([np.sqrt(branch * z.second_derivative / 2.0) for z in zeros])
    global_sign = -1.0 if negate else 1.0

    def sign_at(tq):
        # -1 left of the first zero, alternating at each zero; +1 just right of a zero
        n_left = np.searchsorted(locs, tq, side="left")
        return global_sign * np.where(n_left % 2 == 0, -1.0, 1.0)

    # Numerical data leave Q(a), Q'(a) a rounding error away from zero, which
    # would put a jump of 2 sqrt(Q(a)) into the root.  That offset is removed
    # under a bump of half width W around each zero.
    offsets = []
    for a in locs:
        Qa, Qda, _ = (branch * float(x[0]) for x in xx_columns(dense, a))
        offsets.append((Qa, Qda))
    gaps = np.diff(locs)
    bump_w = min(BUMP_WIDTH, 0.5 * float(gaps.min())) if len(gaps) else BUMP_WIDTH

    def func(tq):
        S, Sd, Sdd = xx_columns(dense, tq)
        Q, Qd, Qdd = branch * S, branch * Sd, branch * Sdd
        for a, (Qa, Qda) in zip(locs, offsets):
            if Qa == 0.0 and Qda == 0.0:
                continue
            h = tq - a
            w, wd, wdd = _bump(h, bump_w)
            lin = Qa + Qda * h
            Q = Q - w * lin
            Qd = Qd - (wd * lin + w * Qda)
            Qdd = Qdd - (wdd * lin + 2.0 * wd * Qda)
        sgn = sign_at(tq)
        mag = np.sqrt(np.maximum(Q, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            rd = sgn * Qd / (2.0 * mag)
        k = np.clip(np.searchsorted(locs, tq), 0, len(locs) - 1)
        k_left = np.clip(k - 1, 0, len(locs) - 1)
        nearest = np.where(np.abs(tq - locs[k_left]) < np.abs(tq - locs[k]), k_left, k)
        near = np.abs(tq - locs[nearest]) < half_widths[nearest]
        if near.any():
            # orientation: sign of the root just right of the zero
            orient = -sign_at(locs[nearest[near]])
            sq = Qdd[near] / 2.0 - 2.0 * branch * Q[near] ** 2 - tq[near] * Q[near]
            rd[near] = orient * np.sqrt(np.maximum(sq, 0.0))
        r = sgn * mag
        at = np.isin(tq, locs)
        if at.any():
            j = np.searchsorted(locs, tq[at])
            r[at] = 0.0
            rd[at] = -sign_at(locs[j]) * limit_rd[j]
        return np.stack([r, rd], axis=-1)

    model = Model.PII0 if branch > 0 else Model.SIGMA
    op = "sqrt-signed" if branch > 0 else "sqrt-neg-signed"
    params = {"flip_at": locs.tolist(), "negate": negate}
    out_dense = DensePath(model, dense.t_start, dense.t_end, func, op=op, params=params, source=dense)

    ts = _sample_times(dense, samples, extra=locs)
    S, _, _ = xx_columns(dense, ts)
    # a numerically located zero can sit a rounding error on the wrong side
    slack = TOL_ZERO * max(1.0, float(np.max(np.abs(S))))
    bad = _first_bad(ts, branch * S < -slack)
    if bad is not None:
        raise BranchViolationError(f"S has the wrong sign for this root at t={bad!r}", bad)
    unflipped = [z.location for z in locate_zeros(dense)
                 if not np.any(np.abs(locs - z.location) <= 1e-8 * max(1.0, abs(z.location)))]
    if unflipped:
        a = unflipped[0]
        raise BranchViolationError(f"S has a zero at t={a!r} that is not among the flip points", a)

    vals = out_dense.eval(ts)
    residual = second_derivative(out_dense, ts) - _root_rhs(model, ts, vals[:, 0])
    meta = {"op": op, "flip_at": locs.tolist(), "negate": negate}
    if len(locs) > 1:
        meta["extension"] = "multiple zeros: sign flipped at each in sequence"
    return SampledPath(model, ts, vals, residual, out_dense, meta)


def negate_path(path: SampledPath) -> SampledPath:
    d = path.dense
    neg = DensePath(d.model, d.t_start, d.t_end, lambda tq: -d.eval(tq), op="negate", source=d)
    return SampledPath(path.model, path.t, -path.values,
                       None if path.residual is None else -path.residual, neg,
                       {**path.meta, "negate": True})
