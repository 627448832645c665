"""Command-line interface: solver runs, special functions, derivative tables,
stability checks, and plot-ready CSV emission for the built-in examples.

Exit codes: 0 success, 2 argument/range errors, 3 solver divergence,
4 evaluation points outside flow interiors, 5 violated stability checks.
Output is CSV (or TSV) with 12-significant-digit floats; identical inputs
and seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import problems
from .impulsive import NifrdeProblem, solve_nifrde
from .lyapunov import (DiniEvalContext, FlowDomainError, caputo_fractional_dini,
                       check_impulse_decrease, dini_fractional)
from .solver import SolverDivergenceError
from .special_functions import MLParameterError, MLRangeError, ml_one, ml_two
from .stability import (StabilityReport, probe_uniform_stability, reports_to_csv,
                        verify_comparison, verify_quadratic_corollary)

EXIT_OK = 0
EXIT_RANGE = 2
EXIT_DIVERGENCE = 3
EXIT_EVAL_DOMAIN = 4
EXIT_VIOLATED = 5


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _emit(rows, header, args) -> None:
    sep = "\t" if getattr(args, "format", "csv") == "tsv" else ","
    lines = [sep.join(header)]
    lines.extend(sep.join(_fmt(v) if isinstance(v, float) else str(v) for v in row)
                 for row in rows)
    text = "\n".join(lines) + "\n"
    out = getattr(args, "output", None)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if not path.is_absolute():
        base = os.environ.get("NIFRDE_OUT_DIR", ".")
        path = Path(base) / path
    path.write_text(text)


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip() != ""]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ml(args) -> int:
    if (args.q is None) == (args.alpha is None):
        print("ml: give exactly one of --q or --alpha/--beta", file=sys.stderr)
        return EXIT_RANGE
    if args.z is not None:
        zs = [args.z]
    else:
        if args.z_max < args.z_min or args.step <= 0:
            print("ml: bad z range", file=sys.stderr)
            return EXIT_RANGE
        zs = list(np.arange(args.z_min, args.z_max + 0.5 * args.step, args.step))
    try:
        if args.q is not None:
            vals = [(float(z), ml_one(args.q, float(z))) for z in zs]
        else:
            beta = 1.0 if args.beta is None else args.beta
            vals = [(float(z), ml_two(args.alpha, beta, float(z))) for z in zs]
    except (MLRangeError, MLParameterError) as err:
        print(f"ml: {err}", file=sys.stderr)
        return EXIT_RANGE
    _emit(vals, ["z", "value"], args)
    return EXIT_OK


def _build_problem(args) -> tuple[NifrdeProblem, str | None, dict]:
    kw = {}
    for name in ("q", "A", "t0", "horizon"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "x0", None) is not None:
        kw["x0"] = _parse_floats(args.x0)
    if getattr(args, "gains", None) is not None:
        kw["gains"] = tuple(_parse_floats(args.gains))
    if args.config is not None:
        return problems.load_problem(args.config), None, kw
    name = args.builtin or "example1-linear"
    return problems.build_problem(name, **kw), name, kw


def cmd_solve(args) -> int:
    try:
        problem, name, kw = _build_problem(args)
    except (KeyError, ValueError) as err:
        print(f"solve: {err}", file=sys.stderr)
        return EXIT_RANGE
    try:
        traj = solve_nifrde(problem, steps_per_unit=args.steps)
    except SolverDivergenceError as err:
        print(f"solve: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    exact = problems.exact_curve(name, problem, **kw) if name else None
    header = ["t", "segment", "k"] + [f"x_{j+1}" for j in range(problem.n)]
    if exact is not None:
        header += [f"exact_{j+1}" for j in range(problem.n)] + ["abs_err"]
    rows = []
    for t, x, kind, k in traj.points():
        row = [float(t), kind, k] + [float(v) for v in x]
        if exact is not None:
            e = np.atleast_1d(exact(t))
            row += [float(v) for v in e] + [float(np.max(np.abs(x - e)))]
        rows.append(row)
    _emit(rows, header, args)
    return EXIT_OK


def cmd_lyap(args) -> int:
    try:
        problem, name, _ = _build_problem(args)
    except (KeyError, ValueError) as err:
        print(f"lyap: {err}", file=sys.stderr)
        return EXIT_RANGE
    if args.field_curve:
        if (name or "") != "example8":
            print("lyap: --field-curve is only defined for --builtin example8",
                  file=sys.stderr)
            return EXIT_RANGE
        ts = np.linspace(args.t_min, args.t_max, args.num)
        rows = [(float(t), problems.example8_time_factor(float(t))) for t in ts
                if t > 0]
        _emit(rows, ["t", "f"], args)
        return EXIT_OK

    if name == "example8":
        candidate = problems.example8_candidate()
    else:
        candidate = problems.load_candidate({"form": args.candidate})
    if args.t_points:
        ts = _parse_floats(args.t_points)
    else:
        ts = list(np.linspace(args.t_min, args.t_max, args.num))
    xs = _parse_floats(args.x_points) if args.x_points else [1.0]
    x0 = _parse_floats(args.x0)[0] if args.x0 else 1.0
    rows = []
    try:
        for t in ts:
            for x in xs:
                ctx = DiniEvalContext(t=float(t), x=[float(x)], t0=problem.t0,
                                      x0=[x0], q=problem.q, f=problem.f,
                                      schedule=problem.schedule)
                rd = dini_fractional(candidate, ctx)
                rc = caputo_fractional_dini(candidate, ctx)
                closed = rc.closed_form if rc.closed_form is not None else float("nan")
                rows.append((float(t), float(x), rd.value, rc.value, closed,
                             max(rd.oscillation, rc.oscillation)))
    except FlowDomainError as err:
        print(f"lyap: {err}", file=sys.stderr)
        return EXIT_EVAL_DOMAIN
    _emit(rows, ["t", "x", "dini", "caputo_dini", "closed_form", "oscillation"], args)
    return EXIT_OK


def _checks_for(name: str, problem: NifrdeProblem, steps: int):
    traj = solve_nifrde(problem, steps_per_unit=steps)
    reports = []
    if name == "example8":
        V = problems.example8_candidate()
        reports.append(verify_comparison(traj, V))
        for k in range(1, problem.schedule.p + 1):
            mr = check_impulse_decrease(V, problem, k,
                                        sample_x=[np.array([v]) for v in (-1.0, -0.3, 0.4, 1.0)])
            reports.append(StabilityReport(
                name=f"impulse-decrease-{k}",
                verdict="violated" if mr.margin < -1e-9 else "holds",
                worst_margin=mr.margin, witness_t=mr.witness_t,
                witness_state=mr.witness_x))
    else:
        from .lyapunov import quadratic_candidate
        V = quadratic_candidate()
        reports.append(verify_comparison(traj, V))
        reports.append(verify_quadratic_corollary(traj))
    return reports


def cmd_check(args) -> int:
    try:
        problem, name, _ = _build_problem(args)
    except (KeyError, ValueError) as err:
        print(f"check: {err}", file=sys.stderr)
        return EXIT_RANGE
    try:
        reports = _checks_for(name or "custom", problem, args.steps)
    except SolverDivergenceError as err:
        print(f"check: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    text = reports_to_csv(reports, fmt=args.format)
    out = getattr(args, "output", None)
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        if not path.is_absolute():
            path = Path(os.environ.get("NIFRDE_OUT_DIR", ".")) / path
        path.write_text(text)
    return EXIT_VIOLATED if any(r.verdict == "violated" for r in reports) else EXIT_OK


def cmd_probe(args) -> int:
    try:
        problem, name, kw = _build_problem(args)
    except (KeyError, ValueError) as err:
        print(f"probe: {err}", file=sys.stderr)
        return EXIT_RANGE

    def family(t0, x0):
        x0 = np.atleast_1d(x0)
        over = dict(kw)
        over["t0"] = t0
        over["x0"] = x0
        if args.config is not None:
            raise ValueError("probe works with built-in problems only")
        return problems.build_problem(name or "example1-linear", **over)

    t0s = _parse_floats(args.t0_samples) if args.t0_samples else [problem.t0]
    grid = _parse_floats(args.delta_grid) if args.delta_grid else None
    delta, rep = probe_uniform_stability(family, epsilon=args.epsilon,
                                         t0_samples=t0s, delta_grid=grid,
                                         steps_per_unit=args.steps, seed=args.seed)
    rows = [("delta" if delta is not None else "no-delta",
             rep.verdict, float(delta) if delta is not None else float("nan"),
             float(args.epsilon), float(rep.horizon))]
    _emit(rows, ["result", "verdict", "delta", "epsilon", "horizon"], args)
    return EXIT_OK if delta is not None else EXIT_VIOLATED


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--builtin", choices=problems.BUILTIN_PROBLEMS)
    p.add_argument("--config", help="JSON problem description (see README)")
    p.add_argument("--q", type=float)
    p.add_argument("--A", type=float)
    p.add_argument("--gains", help="comma-separated impulse gains")
    p.add_argument("--x0", help="comma-separated initial state")
    p.add_argument("--t0", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--steps", type=int, default=256,
                   help="solver steps per unit time")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "tsv"), default="csv")
    p.add_argument("--output", help="output file (relative paths resolve "
                                    "against $NIFRDE_OUT_DIR)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nifrde",
                                 description="Caputo fractional differential "
                                             "equations with non-instantaneous "
                                             "impulses: solve, differentiate, check.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml", help="tabulate Mittag-Leffler values")
    p.add_argument("--q", type=float, help="one-parameter order")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--z", type=float)
    p.add_argument("--z-min", type=float, default=-5.0)
    p.add_argument("--z-max", type=float, default=5.0)
    p.add_argument("--step", type=float, default=0.5)
    _add_output_flags(p)
    p.set_defaults(fn=cmd_ml)

    p = sub.add_parser("solve", help="solve a problem, emit trajectory CSV")
    _add_problem_flags(p)
    _add_output_flags(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("lyap", help="tabulate Lyapunov derivative operators")
    _add_problem_flags(p)
    p.add_argument("--candidate", choices=("quadratic", "weighted_quadratic"),
                   default="quadratic")
    p.add_argument("--t-points", help="comma-separated evaluation times")
    p.add_argument("--x-points", help="comma-separated states")
    p.add_argument("--t-min", type=float, default=0.5)
    p.add_argument("--t-max", type=float, default=4.0)
    p.add_argument("--num", type=int, default=8)
    p.add_argument("--field-curve", action="store_true",
                   help="emit the example8 time factor f(t) instead")
    _add_output_flags(p)
    p.set_defaults(fn=cmd_lyap)

    p = sub.add_parser("check", help="run comparison checks along a trajectory")
    _add_problem_flags(p)
    _add_output_flags(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("probe", help="epsilon-delta uniform stability probe")
    _add_problem_flags(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--t0-samples", help="comma-separated initial times")
    p.add_argument("--delta-grid", help="comma-separated deltas, descending")
    p.add_argument("--seed", type=int, default=0)
    _add_output_flags(p)
    p.set_defaults(fn=cmd_probe)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
