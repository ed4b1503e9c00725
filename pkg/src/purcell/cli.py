"""Command-line front end.

    purcell solve [--config run.cfg] [--out DIR] ...
    purcell rollout --controls controls.csv [--config run.cfg] [--out DIR]
    purcell check-pmp --trajectory trajectory.csv --costates costates.csv [--config run.cfg]

Exit codes: 0 success or certified, 2 configuration or input error,
3 solver did not converge or the solution failed certification.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import tables
from .config import ConfigError, RunConfig, dumps, load, with_overrides
from .errors import PurcellError
from .integrator import cost, holonomy, rollout
from .pmp import pmp_residuals
from .solver import solve, verify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILED = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run configuration file (key = value)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--units", choices=("deg", "rad"), help="angular units of exported tables")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="purcell", description="Discrete isoholonomic gait optimization for the three-link swimmer.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the optimal gait problem and export tables")
    _add_common(p)
    p.add_argument("--solver", choices=("direct", "shooting"))
    p.add_argument("--tol", type=float, help="constraint and stationarity tolerance")
    p.add_argument("--max-iter", type=int, help="maximum outer iterations")
    p.add_argument("--seed-amplitude", type=float, help="amplitude of the sinusoidal initial guess (rad/s)")
    p.add_argument("--phase-interval", type=float, help="phase-portrait sampling interval in seconds")

    p = sub.add_parser("rollout", help="integrate a controls table and export the trajectory")
    _add_common(p)
    p.add_argument("--controls", required=True, help="controls table (u1,u2 in rad/s)")

    p = sub.add_parser("check-pmp", help="check the discrete maximum principle on exported tables")
    _add_common(p)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--costates", required=True)
    p.add_argument("--tol", type=float, help="residual tolerance")
    return parser


def _load_config(args) -> RunConfig:
    config = load(args.config) if args.config else RunConfig()
    overrides = {"dir": args.out, "units": args.units}
    if args.command == "solve":
        overrides.update(
            method=args.solver,
            max_outer_iterations=args.max_iter,
            seed_amplitude=args.seed_amplitude,
            phase_interval=args.phase_interval,
        )
        if args.tol is not None:
            overrides.update(constraint_tolerance=args.tol, stationarity_tolerance=args.tol)
    try:
        return with_overrides(config, **overrides)
    except ValueError as exc:
        raise ConfigError("command line", str(exc)) from None


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text, flush=True)


def cmd_solve(args, config: RunConfig) -> int:
    spec = config.problem()
    out = Path(config.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    log_lines = ["# iteration cost constraint stationarity"]

    def progress(rec):
        log_lines.append(rec.line())
        _say(args, rec.line())

    solution = solve(spec, config.solver, progress=progress)
    report = verify(solution, spec, config.solver.constraint_tolerance, config.solver.pmp_tolerance)
    log_lines.append(f"# status {solution.status}")

    units = config.output.units
    tables.write_trajectory(out / "trajectory.csv", solution.trajectory, units)
    tables.write_phase_portrait(out / "phase_portrait.csv", solution.trajectory, config.output.phase_interval, units)
    tables.write_controls(out / "controls.csv", solution.controls)
    tables.write_costates(out / "costates.csv", solution.costates)
    tables.atomic_write(out / "residuals.txt", f"status              {solution.status}\n" + report.to_table() + "\n")
    tables.atomic_write(out / "convergence.log", "\n".join(log_lines) + "\n")
    tables.atomic_write(out / "run.cfg", dumps(config))

    _say(args, report.to_table())
    if solution.converged and report.passed:
        return EXIT_OK
    print(f"solver status {solution.status}; certified: {'yes' if report.passed else 'no'}", file=sys.stderr)
    return EXIT_FAILED


def cmd_rollout(args, config: RunConfig) -> int:
    spec = config.problem()
    try:
        controls = tables.read_controls(args.controls)
    except tables.TableError as exc:
        raise ConfigError("controls", str(exc)) from None
    N = spec.params.N
    if len(controls) != N:
        raise ConfigError("controls", f"{args.controls} has {len(controls)} rows, discretization.N = {N}")
    traj = rollout(spec.g0, spec.alpha_bar, controls, spec.params, spec.geometry, check_domain=False)
    out = Path(config.output.dir)
    tables.write_trajectory(out / "trajectory.csv", traj, config.output.units)
    g = holonomy(traj)
    print(f"holonomy {g[0]:.17g} {g[1]:.17g} {g[2]:.17g}")
    print(f"cost {cost(controls, spec.params.h):.17g}")
    return EXIT_OK


def cmd_check_pmp(args, config: RunConfig) -> int:
    units = config.output.units
    try:
        traj = tables.read_trajectory(args.trajectory, units)
        costates = tables.read_costates(args.costates)
    except (tables.TableError, ValueError) as exc:
        raise ConfigError("input", str(exc)) from None
    if costates.N != traj.N:
        raise ConfigError("input", f"costate table has {costates.N} rows, trajectory has {traj.N} steps")
    tol = args.tol if args.tol is not None else config.solver.pmp_tolerance
    report = pmp_residuals(traj, costates, config.geometry)
    passed = report.passed(tol)
    print(report.to_table(tol))
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(over="ignore", invalid="ignore")
    try:
        config = _load_config(args)
        handler = {"solve": cmd_solve, "rollout": cmd_rollout, "check-pmp": cmd_check_pmp}[args.command]
        return handler(args, config)
    except (ConfigError, tables.TableError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PurcellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
