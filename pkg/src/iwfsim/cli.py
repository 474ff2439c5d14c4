"""Command-line front end: ``iwfsim run | analyze | sweep``.

Exit codes for ``run``: 0 converged, 2 max iterations exceeded, 3 cycle
detected. Any input problem exits with 1.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from .analysis import analyze, build_hmax, empirical_beta, spectral_radius
from .engine import ScheduleSpec, StopSpec, Verdict, run
from .model import Scenario, uniform_profile, zero_profile
from .scenario_io import ScenarioFormatError, fmt, load_scenario, write_trace_csv

EXIT_OK, EXIT_INPUT, EXIT_MAX_ITERS, EXIT_CYCLE = 0, 1, 2, 3
VERDICT_EXIT = {
    Verdict.CONVERGED: EXIT_OK,
    Verdict.MAX_ITERS_EXCEEDED: EXIT_MAX_ITERS,
    Verdict.CYCLE_DETECTED: EXIT_CYCLE,
}
SCHEDULES = {"seq": "sequential", "sim": "simultaneous", "async": "asynchronous"}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for max_iters_exceeded
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _round(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, list):
        return [_round(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    return obj


def _add_schedule_flags(p):
    p.add_argument("--schedule", choices=sorted(SCHEDULES), default="sim")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delay-bound", type=int, default=2)
    p.add_argument("--activation-prob", type=float, default=0.5)
    p.add_argument("--starvation-bound", type=int, default=5)
    p.add_argument("--order", type=str, default=None,
                   help="comma-separated user order for the sequential schedule")


def _add_stop_flags(p):
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--cycle-window", type=int, default=8)


def _schedule(args, kind=None) -> ScheduleSpec:
    order = None
    if args.order:
        order = tuple(int(u) for u in args.order.split(","))
    kind = SCHEDULES[kind or args.schedule]
    return ScheduleSpec(
        kind=kind, order=order if kind == "sequential" else None, alpha=args.alpha,
        delay_bound=args.delay_bound, activation_probability=args.activation_prob,
        starvation_bound=args.starvation_bound, rng_seed=args.seed)


def _stop(args) -> StopSpec:
    return StopSpec(tol=args.tol, max_iters=args.max_iters, cycle_window=args.cycle_window)


def _initial(args, s: Scenario) -> np.ndarray:
    if args.init == "zero":
        return zero_profile(s)
    if args.init == "uniform":
        return uniform_profile(s)
    if not args.init_file:
        raise InputError("--init file requires --init-file PATH")
    try:
        with open(args.init_file) as fh:
            p = np.array(json.load(fh), dtype=float)
    except (OSError, ValueError, TypeError) as exc:
        raise InputError(f"{args.init_file}: cannot read initial profile ({exc})") from exc
    if p.shape != (s.num_users, s.num_channels):
        raise InputError(f"{args.init_file}: expected shape "
                         f"({s.num_users}, {s.num_channels}), got {p.shape}")
    return p


def cmd_run(args) -> int:
    s = load_scenario(args.scenario)
    trace = run(s, _initial(args, s), _schedule(args), _stop(args))
    if args.output:
        write_trace_csv(trace, args.output)
    print(f"verdict: {trace.verdict.value}")
    print(f"iterations_used: {trace.iterations_used}")
    for i, r in enumerate(trace.per_user_rates[-1]):
        powers = ", ".join(fmt(x) for x in trace.final_profile[i])
        print(f"user {i}: rate {fmt(r)} nats, power [{powers}]")
    return VERDICT_EXIT[trace.verdict]


def cmd_analyze(args) -> int:
    s = load_scenario(args.scenario)
    report = analyze(s)
    doc = _round(report.to_dict())
    text = json.dumps(doc, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    verdict = "certified" if report.contraction_certified else "not certified"
    print(f"spectral radius {fmt(report.spectral_radius)}: contraction {verdict}")
    return EXIT_OK


def with_parameter(s: Scenario, name: str, value: float) -> Scenario:
    """Copy of ``s`` with one named scalar overridden."""
    if name == "h":
        g = np.array(s.gain)
        off = ~np.eye(s.num_users, dtype=bool)
        g[off] = value
        return Scenario(g, s.noise, s.power_budget, s.mask)
    if name == "budget":
        return Scenario(s.gain, s.noise, np.full(s.num_users, value), s.mask)
    if name == "noise":
        return Scenario(s.gain, np.full_like(s.noise, value), s.power_budget, s.mask)
    raise InputError(f"unknown sweep parameter {name!r}")


SWEEP_PARAMS = ("h", "budget", "noise", "alpha")
SWEEP_COLUMNS = ("param", "value", "schedule", "rho", "verdict", "iterations", "beta")


def _sweep_values(args) -> list:
    try:
        if args.values is not None:
            vals = [float(v) for v in args.values.split(",") if v.strip()]
        else:
            start, stop, num = args.range.split(":")
            vals = list(np.linspace(float(start), float(stop), int(num)))
    except ValueError as exc:
        raise InputError(f"bad sweep values: {exc}") from exc
    if not vals:
        raise InputError("sweep range is empty")
    return vals


def sweep_rows(s: Scenario, param: str, values, schedules, args) -> list:
    rows = []
    for v in values:
        point = s if param == "alpha" else with_parameter(s, param, v)
        rho = spectral_radius(build_hmax(point))
        for key in schedules:
            spec = _schedule(args, key)
            if param == "alpha":
                spec = dataclasses.replace(spec, alpha=v)
            trace = run(point, _initial(args, point), spec, _stop(args))
            rows.append((param, fmt(v), SCHEDULES[key], fmt(rho), trace.verdict.value,
                         trace.iterations_used, fmt(empirical_beta(trace))))
    return rows


def cmd_sweep(args) -> int:
    s = load_scenario(args.scenario)
    values = _sweep_values(args)
    schedules = [x.strip() for x in args.schedules.split(",") if x.strip()]
    bad = [x for x in schedules if x not in SCHEDULES]
    if bad or not schedules:
        raise InputError(f"unknown schedules {bad}; choose from {sorted(SCHEDULES)}")
    rows = sweep_rows(s, args.param, values, schedules, args)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(SWEEP_COLUMNS)
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iwfsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="iterate one schedule and write a trace CSV")
    p.add_argument("scenario")
    _add_schedule_flags(p)
    _add_stop_flags(p)
    p.add_argument("--init", choices=("zero", "uniform", "file"), default="zero")
    p.add_argument("--init-file", default=None, help="JSON [i][k] starting profile")
    p.add_argument("-o", "--output", default="trace.csv",
                   help="trace CSV path (empty string to skip)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="report H^max, spectral radius and certificate")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", default=None, help="also write the JSON report here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="vary one scalar and tabulate convergence")
    p.add_argument("scenario")
    p.add_argument("--param", choices=SWEEP_PARAMS, default="h")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--values", help="comma-separated values")
    grp.add_argument("--range", help="start:stop:num (inclusive linspace)")
    p.add_argument("--schedules", default="seq,sim,async")
    _add_schedule_flags(p)
    _add_stop_flags(p)
    p.add_argument("--init", choices=("zero", "uniform", "file"), default="zero")
    p.add_argument("--init-file", default=None)
    p.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioFormatError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
