"""Command line front end.

    painleve-xx integrate --model pii0 --init 0,1 --t0=-1 --t1 1 --format json --out run.json
    painleve-xx transform --op square --in run.json --format json --out sq.json
    painleve-xx transform --op sqrt-signed --in sq.json --flip-at 0
    painleve-xx zeros --in sq.json
    painleve-xx verify --suite all --out report.json

Negative values must be attached with ``=`` (``--init=-1,0.5``).

Exit status: 0 success, 1 verification failure, 2 usage, 3 near-singular XX
start, 4 blow-up truncation (the partial solution is still written and
flagged), 5 branch violation.

CSV output has one header row and one row per sample.  Numbers are written
with ``repr``, so the decimal point never depends on the locale.  Headers:

    integrate pii0          t,s,s_dot
    integrate xx            t,S,S_dot
    integrate xxprime       t,S,S_dot,S_ddot
    transform square        t,S,S_dot,S_ddot,residual    (residual is C)
    transform sqrt-pos      t,s,s_dot,residual
    transform sqrt-signed   t,s,s_dot,residual
    transform sqrt-neg      t,sigma,sigma_dot,residual

JSON documents all carry ``"format_version": 1``:

    integration  {kind: "integration", model, columns, rows, truncated,
                  stats, events, trajectory, config}
                 ``trajectory`` is the full dense trajectory; it reloads
                 field for field.
    path         {kind: "path", op, params, model, columns, rows, meta,
                  source, config}
                 ``source`` is the input document, so a path can be fed
                 back into ``transform``.
    zeros        {kind: "zeros", model, zeros, no_sign_change}
    report       {suite, cases: [{id, theorem, measured, threshold,
                  relation, pass, detail}], tolerances, integrator_stats,
                  overall}

Only JSON output can be passed to ``--in``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, PainleveError, StepSizeUnderflowError, UsageError
from .integrator import EventSpec, ToleranceConfig, Trajectory, integrate
from .models import Model, XxState, lift_xx_to_xxprime, make_state
from .paths import SampledPath
from .transforms import negate_path, sqrt_negative, sqrt_positive, sqrt_signed, square_trajectory
from .verify import ensemble_cases, run_suite, SUITES
from .zero_analysis import TOL_CLASS, TOL_DERIV, TOL_ZERO, check_no_sign_change, locate_zeros

FORMAT_VERSION = 1
TRANSFORM_OPS = ("square", "sqrt-pos", "sqrt-signed", "sqrt-neg")
# a --flip-at value must be this close (relative) to a located zero
FLIP_MATCH = 1e-6

_NOT_PARAMS = {"config", "write_config", "func", "command"}


@dataclass(frozen=True)
class RunConfig:
    """The parameters of one invocation, as written by ``--write-config``."""

    command: str
    params: dict = field(default_factory=dict)

    def render(self) -> str:
        doc = {"format_version": FORMAT_VERSION, "command": self.command, "params": self.params}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise UsageError(f"config is not valid JSON: {err}") from None
        if not isinstance(doc, dict) or "command" not in doc:
            raise UsageError("config must be an object with a 'command' field")
        if doc.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
            raise UsageError(f"unsupported config format_version {doc['format_version']!r}")
        return cls(str(doc["command"]), dict(doc.get("params", {})))

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        params = {k: v for k, v in sorted(vars(ns).items()) if k not in _NOT_PARAMS}
        return cls(ns.command, params)


# ---------------------------------------------------------------------------
# input/output helpers
# ---------------------------------------------------------------------------

def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None


def _csv(columns, rows) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(repr(float(x)) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as err:
        raise UsageError(f"cannot write {out}: {err}") from None


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise UsageError(f"{path} is not a JSON document (CSV cannot be re-read): {err}") from None
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise UsageError(f"{path} is not a format_version {FORMAT_VERSION} document")
    return doc


def _tolerances(args) -> ToleranceConfig:
    try:
        return ToleranceConfig(rtol=args.rtol, atol=args.atol)
    except ValueError as err:
        raise UsageError(str(err)) from None


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------

def initial_state(model: Model, values: list[float], t0: float, sddot_at_zero: float | None):
    """Build ``(model_to_integrate, state)`` from ``--init`` values.

    ``n = dim`` values are the state at ``t0``; ``n = dim + 1`` values lead
    with the initial time.  With ``--sddot-at-zero`` the values are XX data
    ``[t,] S, S'`` at a zero, lifted to XX'.
    """
    if sddot_at_zero is not None:
        if model is Model.PII0:
            raise UsageError("--sddot-at-zero applies to xx and xxprime only")
        if len(values) not in (2, 3):
            raise UsageError("with --sddot-at-zero, --init takes [t,]S,S_dot")
        t, (S, Sd) = (values[0], values[1:]) if len(values) == 3 else (t0, values)
        return Model.XXPRIME, lift_xx_to_xxprime(XxState(t, S, Sd), sddot_at_zero)

    dim = model.dim
    if len(values) == dim:
        t, y = t0, values
    elif len(values) == dim + 1:
        t, y = values[0], values[1:]
    else:
        raise UsageError(f"--init for {model.value} takes {dim} values (or {dim + 1} with a leading t)")
    if model is Model.XX and y[0] == 0.0 and y[1] == 0.0:
        raise UsageError("XX data at a zero are not determined by S and S'; "
                         "give --sddot-at-zero to lift them to XX'")
    return model, make_state(model, t, y)


def _trajectory_doc(traj: Trajectory, hits, samples: int, config: RunConfig) -> dict:
    ts, ys = traj.sample(samples)
    return {
        "format_version": FORMAT_VERSION,
        "kind": "integration",
        "model": traj.model.value,
        "columns": ["t", *traj.model.columns],
        "rows": np.column_stack([ts, ys]).tolist(),
        "truncated": traj.truncated,
        "stats": dict(traj.stats),
        "events": [h.to_dict() for h in hits],
        "trajectory": traj.to_dict(),
        "config": config.params,
    }


def _emit_integration(traj, hits, args, config) -> None:
    doc = _trajectory_doc(traj, hits, args.samples, config)
    if args.format == "json":
        _write(json.dumps(doc) + "\n", args.out)
    else:
        _write(_csv(doc["columns"], doc["rows"]), args.out)
        for h in hits:
            print(f"event {h.name} t={h.t!r} direction={h.direction:+d}", file=sys.stderr)


def cmd_integrate(args, config: RunConfig) -> int:
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    model = Model.parse(args.model)
    if model is Model.SIGMA:
        raise UsageError("sigma paths come from 'transform --op sqrt-neg', not from integration")
    model, init = initial_state(model, _floats(args.init, "--init"), args.t0, args.sddot_at_zero)
    events = [EventSpec.parse(e) for e in (args.events.split(",") if args.events else []) if e]
    tol = _tolerances(args)
    try:
        traj, hits = integrate(model, init, (args.t0, args.t1), tol, events)
    except (StepSizeUnderflowError, BudgetExceededError) as err:
        if err.partial is None or err.partial.n_nodes < 2:
            raise
        print(f"warning: {err}; writing the partial solution (truncated)", file=sys.stderr)
        _emit_integration(err.partial, [], args, config)
        return err.exit_code
    _emit_integration(traj, hits, args, config)
    return 0


# ---------------------------------------------------------------------------
# transform and zeros
# ---------------------------------------------------------------------------

def _zeros_at(src, flip_at):
    located = locate_zeros(src)
    chosen = []
    for a in flip_at:
        near = [z for z in located if abs(z.location - a) <= FLIP_MATCH * max(1.0, abs(a))]
        if not near:
            found = ", ".join(repr(z.location) for z in located) or "none"
            raise UsageError(f"no zero of S near --flip-at {a!r} (zeros found: {found})")
        chosen.append(min(near, key=lambda z: abs(z.location - a)))
    return chosen


def apply_op(src, op: str, params: dict, samples: int) -> SampledPath:
    flip_at = params.get("flip_at") or []
    negate = bool(params.get("negate", False))
    if op == "square":
        return square_trajectory(src, samples)
    if op == "sqrt-pos":
        out = sqrt_positive(src, samples)
        return negate_path(out) if negate else out
    if op == "sqrt-neg":
        if flip_at:
            return sqrt_negative(src, samples, zeros=_zeros_at(src, flip_at), negate=negate)
        return sqrt_negative(src, samples, negate=negate)
    if op == "sqrt-signed":
        zeros = _zeros_at(src, flip_at) if flip_at else locate_zeros(src)
        if not zeros:
            raise UsageError("no zero of S to flip at; use --op sqrt-pos for a positive solution")
        return sqrt_signed(src, zeros, samples, negate)
    raise UsageError(f"unknown transform {op!r}")


def load_document(doc: dict):
    """Rebuild the trajectory or transformed path described by a CLI document."""
    kind = doc.get("kind")
    if kind == "integration":
        return Trajectory.from_dict(doc["trajectory"])
    if kind == "path":
        return apply_op(load_document(doc["source"]), doc["op"], doc.get("params", {}), len(doc["rows"]))
    raise UsageError(f"cannot use a {kind!r} document as transform input")


def cmd_transform(args, config: RunConfig) -> int:
    if args.samples < 8:
        raise UsageError("--samples must be at least 8")
    source_doc = _read_json(args.input)
    src = load_document(source_doc)
    params = {"flip_at": _floats(args.flip_at, "--flip-at") if args.flip_at else [],
              "negate": bool(args.negate)}
    if params["flip_at"] and args.op not in ("sqrt-signed", "sqrt-neg"):
        raise UsageError("--flip-at applies to sqrt-signed and sqrt-neg only")
    path = apply_op(src, args.op, params, args.samples)
    if args.format == "json":
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "path",
            "op": args.op,
            "params": params,
            "model": path.model.value,
            "columns": list(path.columns),
            "rows": path.rows().tolist(),
            "meta": dict(path.meta),
            "source": source_doc,
            "config": config.params,
        }
        _write(json.dumps(doc) + "\n", args.out)
    else:
        _write(_csv(path.columns, path.rows()), args.out)
    return 0


def cmd_zeros(args, config: RunConfig) -> int:
    src = load_document(_read_json(args.input))
    zeros = locate_zeros(src, args.tol_zero, args.tol_deriv, args.tol_class)
    doc = {"format_version": FORMAT_VERSION, "kind": "zeros", "model": src.model.value,
           "zeros": [z.to_dict() for z in zeros]}
    if src.model.is_xx_type:
        rep = check_no_sign_change(src, zeros)
        doc["no_sign_change"] = {"ok": rep.ok, "offending": rep.offending}
    _write(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args, config: RunConfig) -> int:
    tol = _tolerances(args)
    report = run_suite(args.suite, tol)
    if args.ensemble:
        report.cases.extend(ensemble_cases(args.ensemble, args.seed, tol))
    _write(json.dumps(report.to_dict(), indent=1) + "\n", args.out)
    for case in report.failed:
        print(f"FAIL {case.id}: measured {case.measured!r} {case.relation} {case.threshold!r}",
              file=sys.stderr)
    return 0 if report.overall else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="painleve-xx", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs = {}

    def common(p, tolerances=True):
        p.add_argument("--out", default="-", help="output file (default stdout)")
        p.add_argument("--config", help="read parameters from a JSON config; flags override it")
        p.add_argument("--write-config", help="write the effective parameters as JSON and continue")
        if tolerances:
            p.add_argument("--rtol", type=float, default=1e-10)
            p.add_argument("--atol", type=float, default=1e-10)

    p = sub.add_parser("integrate", help="integrate PII0, XX or XX'")
    p.add_argument("--model", choices=("pii0", "xx", "xxprime"), default="pii0")
    p.add_argument("--init", default=None, help="comma-separated [t,]state")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--events", default="",
                   help="comma-separated name[:any|rising|falling[:terminal]]")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--sddot-at-zero", type=float, default=None,
                   help="S'' at a zero of S; lifts [t,]S,S_dot to XX'")
    common(p)
    p.set_defaults(func=cmd_integrate)
    subs["integrate"] = p

    p = sub.add_parser("transform", help="square or take a root of a solution")
    p.add_argument("--op", choices=TRANSFORM_OPS, default=None)
    p.add_argument("--in", dest="input", default=None, help="JSON from integrate or transform")
    p.add_argument("--flip-at", default=None, help="comma-separated zeros to flip the root at")
    p.add_argument("--negate", action="store_true")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    common(p, tolerances=False)
    p.set_defaults(func=cmd_transform)
    subs["transform"] = p

    p = sub.add_parser("zeros", help="locate and classify zeros of a solution")
    p.add_argument("--in", dest="input", default=None)
    p.add_argument("--tol-zero", type=float, default=TOL_ZERO)
    p.add_argument("--tol-deriv", type=float, default=TOL_DERIV)
    p.add_argument("--tol-class", type=float, default=TOL_CLASS)
    common(p, tolerances=False)
    p.set_defaults(func=cmd_zeros)
    subs["zeros"] = p

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES)}, all")
    p.add_argument("--ensemble", type=int, default=0,
                   help="also check N random squared PII0 solutions")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_verify)
    subs["verify"] = p
    return parser, subs


_REQUIRED = {"integrate": ("init",), "transform": ("op", "input"), "zeros": ("input",)}


def parse_args(argv) -> tuple[argparse.Namespace, RunConfig]:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required: " + ", ".join(subs))
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = RunConfig.parse(fh.read())
        except OSError as err:
            raise UsageError(f"cannot read {args.config}: {err}") from None
        if loaded.command != args.command:
            raise UsageError(f"config is for {loaded.command!r}, not {args.command!r}")
        known = {a.dest for a in subs[args.command]._actions}
        unknown = set(loaded.params) - known
        if unknown:
            raise UsageError(f"unknown config parameters: {', '.join(sorted(unknown))}")
        subs[args.command].set_defaults(**loaded.params)
        args = parser.parse_args(argv)
    for name in _REQUIRED.get(args.command, ()):
        if getattr(args, name) is None:
            raise UsageError(f"{args.command}: --{name.replace('input', 'in')} is required")
    return args, RunConfig.from_namespace(args)


def main(argv=None) -> int:
    try:
        args, config = parse_args(sys.argv[1:] if argv is None else argv)
        if args.write_config:
            _write(config.render(), args.write_config)
        return args.func(args, config)
    except PainleveError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except SystemExit as exit_:  # --help
        return int(exit_.code or 0)


if __name__ == "__main__":
    raise SystemExit(main())
