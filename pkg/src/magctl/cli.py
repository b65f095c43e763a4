"""``magctl`` command line: analyze, brackets, simulate, check."""
from __future__ import annotations

import argparse
import json
import sys as _sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .dsl import DslError, load_satellite_source, parse_system
from .expr import ConstraintViolation, ExprError
from .lie import DEFAULT_CUTOFF, DEFAULT_THETA, BracketEvaluator, BracketSyntaxError, parse_bracket
from .model import P_STAR, InvalidParams, Params, build_system
from .report import (EXIT_DOMAIN, EXIT_INVALID, EXIT_OK, analyze, exit_code, rat, to_json,
                     to_text, vec)
from .simulate import (ConstantLaw, ControlBoundExceeded, DomainExit, SimulationError, TableLaw,
                       equilibrium_float, integrate_full7, integrate_rk4, orbit_period, zero_law)


class UsageError(Exception):
    """Invalid command-line input; reported on stderr with exit code 1."""


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a rational number: {text.strip()!r}") from None


def _param_overrides(text: str) -> dict[str, Fraction]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"expected name=value, got {item!r}")
        out[key.strip()] = _fraction(val)
    return out


def load_system(args):
    """System from ``--system`` (with ``--params`` overrides) or the built-in satellite."""
    if args.system:
        try:
            text = Path(args.system).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {args.system}: {exc.strerror}") from None
        overrides = _param_overrides(args.params) if args.params else None
        return parse_system(text, overrides, name=Path(args.system).stem)
    params = Params.parse(args.params) if args.params else P_STAR
    return build_system(params)


# ---------------------------------------------------------------------------


def cmd_analyze(args, out) -> int:
    sys = load_system(args)
    doc = analyze(sys, _fraction(args.theta), _fraction(args.cutoff))
    out.write(to_json(doc) if args.format == "json" else to_text(doc))
    return exit_code(doc)


def _point_values(sys, field, point_text: str):
    coords = [_fraction(v) for v in point_text.split(",")]
    if len(coords) != sys.n:
        raise UsageError(f"--point needs {sys.n} coordinates, got {len(coords)}")
    try:
        c = sys.ring.constrained_value(coords) if sys.ring.constrained else None
    except ConstraintViolation:
        c = None
    if sys.ring.constrained is None or c is not None:
        return [e.evaluate_exact(coords, c) for e in field], True
    # irrational constrained value: decimals only
    return [e.evaluate_float([float(v) for v in coords]) for e in field], False


def cmd_brackets(args, out) -> int:
    sys = load_system(args)
    try:
        tree = parse_bracket(args.expr)
    except BracketSyntaxError as exc:
        raise UsageError(f"bracket syntax error: {exc}") from None
    ev = BracketEvaluator(sys)
    try:
        if args.at == "equilibrium":
            values, exact = ev.value(tree), True
        else:
            if not args.point:
                raise UsageError("--at point requires --point x1,...,xn")
            values, exact = _point_values(sys, ev.field(tree), args.point)
    except ExprError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        doc = {"schema_version": 1, "tool_version": __version__, "bracket": str(tree),
               "at": args.at}
        if exact:
            doc["value"] = vec(values)
        else:
            doc["value"] = {"exact": None, "decimal": [float(v) for v in values]}
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        if exact:
            out.write(f"{tree} = ({', '.join(rat(v) for v in values)})\n")
        out.write("decimal: (" + ", ".join(repr(float(v)) for v in values) + ")\n")
    return EXIT_OK


def _initial_state(sys, text: str, seed: int | None) -> np.ndarray:
    xe = equilibrium_float(sys)
    if text == "equilibrium":
        return xe
    if text.startswith("random"):
        _, _, scale = text.partition(":")
        scale_v = float(scale) if scale else 0.05
        rng = np.random.default_rng(seed)
        return xe + scale_v * rng.uniform(-1.0, 1.0, sys.n)
    try:
        x0 = np.array([float(_fraction(v)) for v in text.split(",")])
    except UsageError:
        raise UsageError(f"--x0: expected 'equilibrium', 'random[:scale]' or {sys.n} numbers")
    if x0.shape != (sys.n,):
        raise UsageError(f"--x0 needs {sys.n} coordinates, got {len(x0)}")
    return x0


def _control_law(sys, text: str, bound: float | None):
    if text == "zero":
        return zero_law(sys.m)
    kind, _, rest = text.partition(":")
    if kind == "constant":
        u = [float(_fraction(v)) for v in rest.split(",")]
        if len(u) != sys.m:
            raise UsageError(f"constant control needs {sys.m} values, got {len(u)}")
        return ConstantLaw(u, bound)
    if kind == "file":
        try:
            law = TableLaw.from_csv(rest, bound)
        except OSError as exc:
            raise UsageError(f"cannot read {rest}: {exc.strerror}") from None
        if law.values.shape[1] != sys.m:
            raise UsageError(f"control table needs {sys.m} value columns")
        return law
    raise UsageError(f"unknown control {text!r}: use zero, constant:u1,..,um or file:path")


def cmd_simulate(args, out) -> int:
    sys = load_system(args)
    x0 = _initial_state(sys, args.x0, args.seed)
    law = _control_law(sys, args.control, args.bound)
    omega0 = sys.param_dict.get("omega0", Fraction(1))
    t_end = float(_fraction(args.t_end)) if args.t_end else orbit_period(omega0)
    h = float(args.h)
    integrate = integrate_full7 if args.mode == 7 else integrate_rk4
    try:
        traj = integrate(sys, x0, law, t_end=t_end, h=h)
        code = EXIT_OK
    except DomainExit as exc:
        traj, code = exc.trajectory, EXIT_DOMAIN
        print(f"magctl: {exc}", file=_sys.stderr)
    if args.out:
        traj.to_csv(args.out)
    xe = equilibrium_float(sys)
    dev = float(np.max(np.abs(traj.x - xe))) if len(traj) else 0.0
    final = ", ".join(f"{v:.10g}" for v in traj.final)
    summary = {
        "status": traj.status, "steps": len(traj) - 1, "t_end": float(traj.t[-1]),
        "h": traj.meta.get("h", h), "final_state": [float(v) for v in traj.final],
        "max_deviation_from_equilibrium": dev,
        "max_constraint_residual": traj.max_constraint_residual,
        "max_norm_drift": traj.max_norm_drift,
    }
    if args.format == "json":
        out.write(json.dumps(summary, indent=2) + "\n")
    else:
        out.write(f"status={traj.status} steps={summary['steps']} t_end={summary['t_end']:.10g} "
                  f"max_deviation={dev:.3e} norm_drift={traj.max_norm_drift:.3e} "
                  f"final=({final})\n")
    return code


def cmd_check(args, out) -> int:
    path = args.file or args.system
    if path is None:
        text, name = load_satellite_source(), "satellite"
    else:
        try:
            text, name = Path(path).read_text(), Path(path).stem
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    overrides = _param_overrides(args.params) if args.params else None
    sys = parse_system(text, overrides, name=name)
    if args.format == "json":
        doc = {"status": "ok", "name": sys.name, "n": sys.n, "m": sys.m,
               "variables": list(sys.ring.names), "constrained": sys.ring.constrained,
               "parameters": {k: rat(v) for k, v in sys.params}}
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(f"ok: {sys.name} n={sys.n} m={sys.m} variables={','.join(sys.ring.names)} "
                  f"constrained={sys.ring.constrained or '-'}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="e.g. I1=4,I2=2,I3=1,omega0=1,beta=1 (p/q allowed)")
    common.add_argument("--system", help="system definition file (.cas)")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized inputs")

    p = argparse.ArgumentParser(prog="magctl", description=__doc__)
    p.add_argument("--version", action="version", version=f"magctl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="certify small-time local controllability")
    a.add_argument("--theta", default=str(DEFAULT_THETA))
    a.add_argument("--cutoff", default=str(DEFAULT_CUTOFF))
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("brackets", parents=[common], help="evaluate an iterated Lie bracket")
    b.add_argument("--expr", required=True, help='e.g. "[f0,[f0,f2]]"')
    b.add_argument("--at", choices=("equilibrium", "point"), default="equilibrium")
    b.add_argument("--point", help="comma-separated free coordinates for --at point")
    b.set_defaults(func=cmd_brackets)

    s = sub.add_parser("simulate", parents=[common], help="integrate the closed-loop dynamics")
    s.add_argument("--x0", default="equilibrium", help="equilibrium | random[:scale] | x1,..,xn")
    s.add_argument("--control", default="zero", help="zero | constant:u1,..,um | file:path")
    s.add_argument("--bound", type=float, default=None, help="control norm bound")
    s.add_argument("--t-end", default=None, help="final time (default: one orbit)")
    s.add_argument("--h", type=float, default=1e-3)
    s.add_argument("--mode", type=int, choices=(6, 7), default=6)
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check", parents=[common], help="parse and summarize a system file")
    c.add_argument("file", nargs="?", help="system file (default: shipped satellite model)")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None, out=None) -> int:
    out = out or _sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except DslError as exc:
        print(f"magctl: {exc}", file=_sys.stderr)
    except (UsageError, InvalidParams, ControlBoundExceeded, ExprError, SimulationError,
            ValueError) as exc:
        print(f"magctl: {type(exc).__name__}: {exc}", file=_sys.stderr)
    return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
