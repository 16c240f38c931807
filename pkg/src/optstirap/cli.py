"""Command-line entry point: simulate, solve, sweep, fit-singular.

Exit codes: 0 success, 2 input error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional

import numpy as np

from . import direct, lossless, shooting
from .dynamics import DEFAULT_DT, ProblemSpec, TrajectoryTrace
from .errors import InputError, SolverFailure, StirapError
from .report import SolveReport, _plain
from .schedule import ControlSchedule, run_schedule

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
CSV_COLUMNS = ["t", "u", "theta", "X", "Y", "Z", "x", "y", "z", "pop1", "pop2", "pop3"]
MODES = ("unconstrained", "nonnegative", "bounded")
SOLVERS = ("analytic", "shooting", "direct", "both")


def trace_rows(trace: TrajectoryTrace):
    pops = trace.populations
    for k in range(trace.times.size):
        yield [trace.times[k], trace.u[k], trace.theta[k], *trace.lab[k], *trace.db[k], *pops[k]]


def write_trace_csv(trace: TrajectoryTrace, path: Optional[str]):
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in trace_rows(trace):
        buf.write(",".join(f"{v:.12g}" for v in row) + "\n")
    _emit(buf.getvalue(), path)


def read_trace_csv(path: str) -> TrajectoryTrace:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in ("t", "u", "theta", "x", "y", "z") if c not in (reader.fieldnames or [])]
            if missing:
                raise InputError(f"{path}: missing columns {missing}")
            rows = list(reader)
    except OSError as exc:
        raise InputError(str(exc)) from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    try:
        col = {c: np.array([float(r[c]) for r in rows]) for c in ("t", "u", "theta", "x", "y", "z")}
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None
    db = np.stack([col["x"], col["y"], col["z"]], axis=1)
    from .dynamics import db_to_lab_array
    return TrajectoryTrace(col["t"], db_to_lab_array(db, col["theta"]), db, col["theta"], col["u"])


def _emit(text: str, path: Optional[str]):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _spec_from(args, duration=None) -> ProblemSpec:
    mode = args.mode
    gamma = args.gamma if args.gamma is not None else 0.0
    T = args.duration if args.duration is not None else duration
    if T is None:
        raise InputError("--duration is required")
    if mode == "bounded":
        u_max = args.u_max if args.u_max is not None else 1.0
    else:
        u_max = float("inf") if args.u_max is None else args.u_max
    return ProblemSpec(gamma, T, u_max, allow_negative_u=(mode == "unconstrained"))


def _load_scenario(args):
    """Fill unset flags from a JSON scenario file."""
    if not getattr(args, "scenario", None):
        return
    try:
        with open(args.scenario) as fh:
            sc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.scenario}: line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise InputError(str(exc)) from None
    if not isinstance(sc, dict):
        raise InputError(f"{args.scenario}: scenario must be a JSON object")
    known = {"gamma", "duration", "u_max", "mode", "solver", "dt", "n", "out", "csv", "gammas", "durations"}
    unknown = set(sc) - known
    if unknown:
        raise InputError(f"{args.scenario}: unknown keys {sorted(unknown)}")
    for key, val in sc.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)


def _check_choice(name, value, choices):
    if value not in choices:
        raise InputError(f"--{name} must be one of {choices}, got {value!r}")


def cmd_simulate(args) -> int:
    _load_scenario(args)
    args.mode = args.mode or "nonnegative"
    _check_choice("mode", args.mode, MODES)
    sched = ControlSchedule.load(args.schedule)
    probe = ProblemSpec(args.gamma or 0.0, 1.0, args.u_max if args.mode == "bounded" and args.u_max else
                        (1.0 if args.mode == "bounded" else float("inf")))
    spec = _spec_from(args, duration=sched.total_duration(probe.u_max) or None)
    if not sched.segments and args.duration is None:
        raise InputError("an empty schedule needs --duration")
    if not sched.segments:
        from .schedule import Off
        sched = ControlSchedule([Off(spec.duration)])
    tr = run_schedule(spec, sched, args.dt or DEFAULT_DT)
    write_trace_csv(tr, args.out)
    return EXIT_OK


def _analytic(spec: ProblemSpec, dt) -> SolveReport:
    if spec.gamma != 0:
        raise InputError("the analytic solver requires gamma = 0")
    if spec.bounded:
        raise InputError("the analytic solver requires unbounded bangs")
    rep = shooting.solve(spec, dt)
    rep.solver = "analytic"
    return rep


def cmd_solve(args) -> int:
    _load_scenario(args)
    args.mode = args.mode or "bounded"
    args.solver = args.solver or "both"
    _check_choice("mode", args.mode, MODES)
    _check_choice("solver", args.solver, SOLVERS)
    spec = _spec_from(args)
    dt = args.dt or DEFAULT_DT
    n = int(args.n) if args.n else max(10, int(round(spec.duration / 0.05)))
    reports, failures = {}, {}
    plan = ["shooting", "direct"] if args.solver == "both" else [args.solver]
    for name in plan:
        try:
            if name == "analytic":
                reports[name] = _analytic(spec, dt)
            elif name == "shooting":
                reports[name] = shooting.solve(spec, dt)
            else:
                reports[name] = direct.optimize(spec, n)
        except SolverFailure as exc:
            failures[name] = {"error": str(exc), "diagnostics": _plain(exc.diagnostics)}
    out = {"reports": {k: r.to_dict(include_schedule=(k != "direct")) for k, r in reports.items()},
           "failures": failures}
    if len(reports) == 2:
        out["population_agreement"] = abs(reports["shooting"].population - reports["direct"].population)
    _emit(json.dumps(_plain(out), indent=2, sort_keys=True) + "\n", args.out)
    if args.csv and reports:
        main_rep = reports.get("shooting") or reports.get("analytic") or reports["direct"]
        write_trace_csv(main_rep.trace, args.csv)
    return EXIT_SOLVER if failures else EXIT_OK


def _floats(text):
    if isinstance(text, list):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse number list {text!r}") from None


def cmd_sweep(args) -> int:
    _load_scenario(args)
    gammas = _floats(args.gammas if args.gammas is not None else [0.1, 0.2])
    Ts = _floats(args.durations if args.durations is not None else list(range(8, 31, 2)))
    if not gammas or not Ts:
        raise InputError("sweep lists must be non-empty")
    solver = args.solver or "direct"
    _check_choice("solver", solver, ("direct", "shooting"))
    u_max = args.u_max if args.u_max is not None else 1.0
    cfg = direct.OptimizeConfig(tol=args.tol)
    res = direct.efficiency_sweep(gammas, Ts, n=int(args.n) if args.n else None, u_max=u_max,
                                  dt=args.dt or 0.05, solver=solver, config=cfg)
    buf = io.StringIO()
    buf.write("gamma,duration,population,structure,singular_fraction,status\n")
    for row in res.rows():
        pop = "" if not np.isfinite(row["population"]) else f"{row['population']:.12g}"
        fr = "" if not np.isfinite(row["singular_fraction"]) else f"{row['singular_fraction']:.12g}"
        buf.write(f"{row['gamma']:.12g},{row['duration']:.12g},{pop},{row['structure'] or ''},{fr},"
                  f"{str(row['status']).replace(',', ';')}\n")
    _emit(buf.getvalue(), args.out)
    ok = np.isfinite(res.population).mean()
    return EXIT_OK if ok >= 0.9 else EXIT_SOLVER


def cmd_fit_singular(args) -> int:
    tr = read_trace_csv(args.trajectory)
    window = tuple(args.window) if args.window else None
    fit = direct.fit_singular_constants(tr, args.gamma or 0.0, window, threshold=args.threshold)
    out = fit.to_dict()
    if fit.c1 is not None and (args.gamma or 0.0) == 0:
        out["u_singular"] = float(np.mean(fit.u_feedback))
        out["c1_from_u"] = float(0.5 / out["u_singular"]) if out["u_singular"] != 0 else None
    _emit(json.dumps(_plain(out), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optstirap", description="Optimal lossy STIRAP protocols.")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, scenario=True):
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--duration", type=float)
        sp.add_argument("--u-max", dest="u_max", type=float)
        sp.add_argument("--mode", choices=MODES)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--out")
        if scenario:
            sp.add_argument("--scenario", help="JSON scenario file; explicit flags win")

    s = sub.add_parser("simulate", help="run a schedule file and write a trajectory CSV")
    s.add_argument("schedule")
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("solve", help="optimise one scenario and write a JSON report")
    common(s)
    s.add_argument("--solver", choices=SOLVERS)
    s.add_argument("--csv", help="trajectory CSV of the primary solution")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="final population over a gamma x duration grid")
    common(s)
    s.add_argument("--solver", choices=("direct", "shooting"))
    s.add_argument("--gammas", help="comma-separated list")
    s.add_argument("--durations", help="comma-separated list")
    s.add_argument("--tol", type=float, default=1e-5)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit-singular", help="fit c1, c2 to a trajectory CSV")
    s.add_argument("trajectory")
    s.add_argument("--gamma", type=float)
    s.add_argument("--window", type=float, nargs=2, metavar=("T_START", "T_END"))
    s.add_argument("--threshold", type=float, default=1e-2)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_singular)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SolverFailure as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        sys.stdout.write(json.dumps(_plain({"error": str(exc), "diagnostics": exc.diagnostics})) + "\n")
        return EXIT_SOLVER
    except (StirapError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
