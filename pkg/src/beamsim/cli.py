"""Command-line front end: simulate, stationary, verify, sweep.

Exit codes: 0 success, 1 verification failure, 2 invalid scenario,
3 solver failure, 4 I/O problem.  Set BEAM_LOG to error, info, or debug to
control logging verbosity.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics, dynamics, outputs, stationary
from .model import InvalidScenario, validate_scenario
from .scenario_io import (
    RunSetup,
    ScenarioFormatError,
    apply_overrides,
    discretization_for,
    load_scenario_file,
    parse_scenario_dict,
)

log = logging.getLogger("beamsim")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID_SCENARIO = 2
EXIT_SOLVER_FAILURE = 3
EXIT_IO = 4

# verification thresholds for the tail checks (the monotonicity and balance
# tolerances scale with the Newton tolerance instead)
VERIFY_DISSIPATION_TAIL = 1e-8
VERIFY_WINDOW = 1.0
VERIFY_WINDOW_TAIL = 1e-10
VERIFY_POTENTIAL_GAP = 1e-10


def _setup_logging() -> None:
    level_name = os.environ.get("BEAM_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        print(
            f"warning: BEAM_LOG={level_name!r} not in {sorted(levels)}; using 'error'",
            file=sys.stderr,
        )
        level_name = "error"
    logging.basicConfig(level=levels[level_name], format="%(levelname)s %(name)s: %(message)s")


def _load(path: str):
    """Returns (setup, exit_code); exit_code is None on success."""
    try:
        setup = load_scenario_file(path)
    except OSError as exc:
        print(f"error: cannot read scenario file: {exc}", file=sys.stderr)
        return None, EXIT_IO
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, EXIT_INVALID_SCENARIO
    report = validate_scenario(setup.scenario)
    for w in report.warnings:
        log.info("validation warning: %s", w)
    if not report.ok:
        print("scenario failed validation:", file=sys.stderr)
        print(report.summary(), file=sys.stderr)
        return None, EXIT_INVALID_SCENARIO
    return setup, None


def _run_trajectory(setup: RunSetup, disc):
    stride = setup.output.stride if setup.output.stride > 0 else None
    return dynamics.run(
        setup.scenario,
        disc,
        newton_tol=setup.newton_tol,
        newton_max_iter=setup.newton_max_iter,
        snapshot_stride=stride,
        validate=False,
    )


def _manifest_common(setup: RunSetup, scenario_path: str, disc, started: float) -> dict:
    return {
        "scenario": str(scenario_path),
        "discretization": disc.describe(),
        "tolerances": {
            "newton_tol": setup.newton_tol,
            "newton_max_iter": setup.newton_max_iter,
            "stationary_tol": setup.stationary_tol,
            "gap_tol": setup.gap_tol,
            "v_tol": setup.v_tol,
        },
        "wall_time_s": time.perf_counter() - started,
    }


def cmd_simulate(args) -> int:
    setup, code = _load(args.scenario)
    if code is not None:
        return code
    started = time.perf_counter()
    disc = discretization_for(setup)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        traj = _run_trajectory(setup, disc)
    except dynamics.StepFailed as exc:
        print(f"error: solver failed at t={exc.t:.6g}: {exc.cause}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE

    files = []
    try:
        traj_csv = out_dir / "trajectory.csv"
        outputs.write_trajectory_csv(
            traj_csv, traj, nodal_snapshots=setup.output.nodal_snapshots
        )
        files.append(traj_csv.name)
        if setup.output.plots:
            e = traj.energy
            idx = traj.snapshot_steps
            energy_svg = out_dir / "energy.svg"
            outputs.render_line_svg(
                energy_svg,
                e.t[idx],
                e.total[idx],
                title="Total energy",
                xlabel="t [s]",
                ylabel="E [J]",
            )
            files.append(energy_svg.name)
            try:
                stat = stationary.solve_stationary(
                    setup.scenario, disc, tol=setup.stationary_tol, validate=False
                )
                rep = diagnostics.convergence_report(
                    traj, stat, gap_tol=setup.gap_tol, v_tol=setup.v_tol
                )
                gap_svg = out_dir / "gap.svg"
                outputs.render_line_svg(
                    gap_svg,
                    rep.times,
                    rep.h2star_gap,
                    title="Distance to the stationary solution",
                    xlabel="t [s]",
                    ylabel="||u - u_hat||",
                    logy=True,
                )
                files.append(gap_svg.name)
            except (stationary.NonConvexDetected, stationary.MaxIterationsExceeded) as exc:
                log.warning("skipping gap plot, stationary solve failed: %s", exc)
        payload = _manifest_common(setup, args.scenario, disc, started)
        payload.update(
            {
                "command": "simulate",
                "n_steps": traj.n_steps,
                "total_newton_iters": traj.total_newton_iters,
                "max_residual": traj.max_residual,
                "outputs": files,
            }
        )
        outputs.write_manifest(out_dir, "manifest.json", payload)
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_stationary(args) -> int:
    setup, code = _load(args.scenario)
    if code is not None:
        return code
    started = time.perf_counter()
    disc = discretization_for(setup)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        sol = stationary.solve_stationary(
            setup.scenario, disc, tol=setup.stationary_tol, validate=False
        )
    except (stationary.NonConvexDetected, stationary.MaxIterationsExceeded) as exc:
        print(f"error: stationary solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    try:
        stat_csv = out_dir / "stationary.csv"
        outputs.write_stationary_csv(stat_csv, disc.grid.nodes, disc.to_nodal(sol.u_hat))
        payload = _manifest_common(setup, args.scenario, disc, started)
        payload.update(
            {
                "command": "stationary",
                "grad_norm": sol.grad_norm,
                "total_potential": sol.potential_value,
                "newton_iters": sol.newton_iters,
                "outputs": [stat_csv.name],
            }
        )
        outputs.write_manifest(out_dir, "manifest.json", payload)
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _verify_rows(setup: RunSetup, disc, traj, stat):
    """(name, status, detail) rows; status in PASS/FAIL/SKIP."""
    rows = []
    tol_step = 10.0 * setup.newton_tol

    mono = diagnostics.check_energy_monotone(traj)
    rows.append(
        (
            "energy_monotone",
            "PASS" if mono.violations == 0 else "FAIL",
            f"violations={mono.violations}, worst increase={mono.worst_increase:.3e}",
        )
    )

    worst = diagnostics.check_energy_identity(traj)
    ident_tol = tol_step * max(1, traj.n_steps)
    rows.append(
        (
            "energy_identity",
            "PASS" if worst <= ident_tol else "FAIL",
            f"worst residual={worst:.3e}, budget={ident_tol:.3e}",
        )
    )

    bounds = diagnostics.check_bounds(traj)
    finite = np.isfinite(bounds.sup_h2star) and np.isfinite(bounds.sup_dissipated)
    rows.append(
        (
            "bounds_finite",
            "PASS" if finite else "FAIL",
            f"sup ||u||^2={bounds.sup_h2star:.6g}, dissipated={bounds.sup_dissipated:.6g}",
        )
    )

    rep = diagnostics.convergence_report(
        traj, stat, gap_tol=setup.gap_tol, v_tol=setup.v_tol
    )
    settled = rep.settled_at is not None
    rows.append(
        (
            "settled",
            "PASS" if settled else "FAIL",
            f"settled_at={rep.settled_at}" if settled else "never settled",
        )
    )

    # tail checks only make sense once the flow has settled
    if settled:
        e = traj.energy
        half = float(np.interp(e.t[-1] / 2.0, e.t, e.dissipated))
        tail = float(e.dissipated[-1] - half)
        rows.append(
            (
                "dissipation_tail",
                "PASS" if tail <= VERIFY_DISSIPATION_TAIL else "FAIL",
                f"second-half dissipation={tail:.3e}",
            )
        )
        span = e.t[-1] - e.t[0]
        if span >= 2.0 * VERIFY_WINDOW:
            win = diagnostics.windowed_dissipation(traj, VERIFY_WINDOW)
            late = win.values[win.start_times >= 0.75 * e.t[-1] - VERIFY_WINDOW]
            worst_late = float(np.max(late)) if late.size else float("nan")
            rows.append(
                (
                    "windowed_dissipation",
                    "PASS" if late.size and worst_late <= VERIFY_WINDOW_TAIL else "FAIL",
                    f"worst late window={worst_late:.3e}",
                )
            )
        else:
            rows.append(("windowed_dissipation", "SKIP", "trajectory shorter than 2 windows"))
        gap = rep.potential_gap_at_end
        rows.append(
            (
                "potential_convergence",
                "PASS" if gap <= VERIFY_POTENTIAL_GAP else "FAIL",
                f"potential gap at end={gap:.3e}",
            )
        )
    else:
        rows.append(("dissipation_tail", "SKIP", "not settled"))
        rows.append(("windowed_dissipation", "SKIP", "not settled"))
        rows.append(("potential_convergence", "SKIP", "not settled"))
    return rows


def cmd_verify(args) -> int:
    try:
        setup = load_scenario_file(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario file: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_SCENARIO

    report = validate_scenario(setup.scenario)
    rows = [
        (
            "validation",
            "PASS" if report.ok else "FAIL",
            "; ".join(c.name for c in report.failures()) or "all hypotheses hold",
        )
    ]
    if report.ok:
        disc = discretization_for(setup)
        try:
            traj = _run_trajectory(setup, disc)
            stat = stationary.solve_stationary(
                setup.scenario, disc, tol=setup.stationary_tol, validate=False
            )
        except (
            dynamics.StepFailed,
            stationary.NonConvexDetected,
            stationary.MaxIterationsExceeded,
        ) as exc:
            rows.append(("solver", "FAIL", str(exc)))
            traj = None
        if traj is not None:
            rows.extend(_verify_rows(setup, disc, traj, stat))

    width = max(len(name) for name, _, _ in rows)
    for name, status, detail in rows:
        print(f"{status:<4}  {name:<{width}}  {detail}")
    failed = [name for name, status, _ in rows if status == "FAIL"]
    if failed:
        print(f"verify: FAIL ({', '.join(failed)})")
        return EXIT_VERIFY_FAILED
    print("verify: PASS")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _parse_param(text: str):
    if "=" not in text:
        raise ScenarioFormatError(f"--param needs section.key=v1,v2,..., got '{text}'")
    key, values = text.split("=", 1)
    try:
        parsed = tuple(float(v) for v in values.split(","))
    except ValueError as exc:
        raise ScenarioFormatError(f"--param {key}: values must be numbers") from exc
    if not parsed:
        raise ScenarioFormatError(f"--param {key}: no values given")
    return key.strip(), parsed


def _sweep_worker(payload):
    """Run one parameter combination; always returns a row dict."""
    base, combo = payload
    row = {key: value for key, value in combo}
    try:
        data = apply_overrides(base, dict(combo))
        setup = parse_scenario_dict(data, source="<sweep>")
        report = validate_scenario(setup.scenario)
        if not report.ok:
            raise InvalidScenario(report)
        disc = discretization_for(setup)
        traj = _run_trajectory(setup, disc)
        stat = stationary.solve_stationary(
            setup.scenario, disc, tol=setup.stationary_tol, validate=False
        )
        rep = diagnostics.convergence_report(
            traj, stat, gap_tol=setup.gap_tol, v_tol=setup.v_tol
        )
        row.update(
            {
                "settled_at": rep.settled_at,
                "energy_end": float(traj.energy.total[-1]),
                "dissipated_cumulative": float(traj.energy.dissipated[-1]),
                "newton_iters": traj.total_newton_iters,
                "max_residual": traj.max_residual,
                "status": "ok",
                "message": "",
            }
        )
    except Exception as exc:
        row.update(
            {
                "settled_at": None,
                "energy_end": None,
                "dissipated_cumulative": None,
                "newton_iters": None,
                "max_residual": None,
                "status": "failed",
                "message": str(exc),
            }
        )
    return row


def cmd_sweep(args) -> int:
    try:
        setup = load_scenario_file(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario file: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_SCENARIO

    from .scenario_io import setup_to_dict

    base_dict = setup_to_dict(setup)
    try:
        params = [_parse_param(p) for p in args.param or []]
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_SCENARIO
    params.sort(key=lambda kv: kv[0])  # deterministic product order

    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO

    names = [k for k, _ in params]
    if params:
        combos = [
            tuple(zip(names, values))
            for values in itertools.product(*[vals for _, vals in params])
        ]
    else:
        combos = []
    result_cols = [
        "settled_at",
        "energy_end",
        "dissipated_cumulative",
        "newton_iters",
        "max_residual",
        "status",
        "message",
    ]
    header = names + result_cols

    started = time.perf_counter()
    payloads = [(base_dict, combo) for combo in combos]
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, payloads))
    else:
        results = [_sweep_worker(p) for p in payloads]

    def cell(value):
        if value is None:
            return ""
        if isinstance(value, float):
            return outputs.fmt(value)
        return str(value)

    rows = [[cell(row.get(col)) for col in header] for row in results]
    try:
        sweep_csv = out_dir / "sweep.csv"
        outputs.write_sweep_csv(sweep_csv, header, rows)
        disc = discretization_for(setup)
        payload = _manifest_common(setup, args.scenario, disc, started)
        payload.update(
            {
                "command": "sweep",
                "parameters": {k: list(v) for k, v in params},
                "rows": len(rows),
                "outputs": [sweep_csv.name],
            }
        )
        outputs.write_manifest(out_dir, "manifest.json", payload)
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        return EXIT_IO

    if results and all(r["status"] == "failed" for r in results):
        print("error: every sweep combination failed", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsim",
        description="Damped nonlinear beam: simulation, equilibrium, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate the motion and write trajectory.csv")
    p_sim.add_argument("scenario")
    p_sim.add_argument("-o", "--out-dir", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_stat = sub.add_parser("stationary", help="solve the equilibrium and write stationary.csv")
    p_stat.add_argument("scenario")
    p_stat.add_argument("-o", "--out-dir", required=True)
    p_stat.set_defaults(func=cmd_stationary)

    p_ver = sub.add_parser("verify", help="run all dynamical checks, print PASS/FAIL table")
    p_ver.add_argument("scenario")
    p_ver.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="Cartesian parameter study, one CSV row per run")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("-o", "--out-dir", required=True)
    p_sweep.add_argument(
        "--param",
        action="append",
        metavar="section.key=v1,v2",
        help="repeatable; values are comma-separated numbers",
    )
    p_sweep.add_argument("--jobs", type=int, default=0, help="parallel runs (default: all cores)")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
