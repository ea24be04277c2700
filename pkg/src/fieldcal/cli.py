"""Command-line surface: calibrate, sweep, and synth subcommands.

Exit codes: 0 success, 2 malformed input files (including sensors outside
the field), 3 solver failure, 4 invalid flag values.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core import CalibrationParams, CalibrationProblem, GridLayout
from .dense import DenseSizeError, NotPositiveDefiniteError
from .gridio import (
    FieldFile,
    FieldFormatError,
    SensorFormatError,
    read_field,
    read_sensors,
    snap_sensor,
    write_field,
    write_heatmap,
    write_sensors,
)
from .lowrank import RankDeficiencyError
from .pipeline import calibrate, evaluate, sweep
from .synth import make_case

EXIT_OK = 0
EXIT_BAD_FILE = 2
EXIT_SOLVER = 3
EXIT_BAD_FLAG = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="fieldcal",
        description="Calibrate a simulated scalar field against sparse sensor observations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="calibrate a field file against a sensor file")
    _add_common_flags(cal)
    cal.add_argument("--holdout", help="sensor file scored but never fed to the solver")
    cal.add_argument(
        "--heatmaps", action="store_true", help="also write PGM heatmaps of the outputs"
    )
    cal.set_defaults(func=_cmd_calibrate)

    swp = sub.add_parser("sweep", help="rerun the calibration along one parameter axis")
    _add_common_flags(swp)
    swp.add_argument("--axis", required=True, choices=["alpha", "sigma-m", "sigma-d"])
    swp.add_argument("--values", required=True, help="comma-separated list of axis values")
    swp.add_argument("--holdout", required=True, help="holdout sensor file for scoring")
    swp.set_defaults(func=_cmd_sweep)

    syn = sub.add_parser("synth", help="generate a deterministic synthetic case")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--nx", type=int, default=80)
    syn.add_argument("--ny", type=int, default=40)
    syn.add_argument("--spacing", type=float, default=0.1)
    syn.add_argument("--calib", type=int, default=4)
    syn.add_argument("--holdout", type=int, default=4)
    syn.add_argument("--out", required=True)
    syn.set_defaults(func=_cmd_synth)

    return parser


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--field", required=True, help="field CSV (simulated values)")
    p.add_argument("--sensors", required=True, help="sensor CSV (x,y,value rows)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sigma-m", type=float, required=True, dest="sigma_m")
    p.add_argument("--sigma-d", type=float, required=True, dest="sigma_d")
    p.add_argument("--solver", choices=["dense", "lowrank"], default="dense")
    p.add_argument(
        "--rank",
        type=int,
        default=100,
        help="column-sample count for the lowrank solver (clipped to N)",
    )
    p.add_argument("--rowsum", choices=["exact", "lowrank"], default="lowrank")
    p.add_argument("--out", required=True, help="output directory")


def _snap_all(
    grid: GridLayout, rows: list[tuple[float, float, float]], label: str
) -> tuple[list[tuple[int, float]], list[dict]]:
    """Snap sensor coordinates to mesh points, rejecting duplicates."""
    pairs: list[tuple[int, float]] = []
    records: list[dict] = []
    seen: dict[int, tuple[float, float]] = {}
    for x, y, value in rows:
        idx, dist = snap_sensor(grid, x, y)
        if idx in seen:
            raise SensorFormatError(
                f"{label} sensors at ({x:g}, {y:g}) and {seen[idx]} snap to the "
                f"same mesh point {idx}"
            )
        seen[idx] = (x, y)
        pairs.append((idx, value))
        records.append(
            {
                "x": x,
                "y": y,
                "value": value,
                "mesh_index": idx,
                "snap_distance": dist,
            }
        )
    return pairs, records


def _make_params(args: argparse.Namespace, n_points: int) -> CalibrationParams:
    if args.rank < 1:
        raise ValueError(f"--rank must be >= 1, got {args.rank}")
    return CalibrationParams(
        sigma_m=args.sigma_m,
        sigma_d=args.sigma_d,
        alpha=args.alpha,
        n_samples=min(args.rank, n_points),
        rowsum_mode=args.rowsum,
        solver=args.solver,
    )


def _cmd_calibrate(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    field = read_field(args.field)
    sensor_rows = read_sensors(args.sensors)
    pairs, sensor_records = _snap_all(field.grid, sensor_rows, "calibration")
    problem = CalibrationProblem.from_grid(field.grid, field.flat(), pairs)
    params = _make_params(args, problem.n_points)

    t_solve = time.perf_counter()
    result = calibrate(problem, params)
    solve_seconds = time.perf_counter() - t_solve

    evaluation = None
    holdout_records: list[dict] | None = None
    if args.holdout:
        holdout_rows = read_sensors(args.holdout)
        holdout_pairs, holdout_records = _snap_all(field.grid, holdout_rows, "holdout")
        report = evaluate(problem, result, holdout_pairs)
        evaluation = {
            "rmse_before": report.rmse_before,
            "rmse_after": report.rmse_after,
            "improvement": report.improvement,
            "per_sensor": [
                {"mesh_index": i, "error_before": b, "error_after": a}
                for i, b, a in report.per_sensor
            ],
        }

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    calibrated = FieldFile.from_flat(field.grid, result.f_hat)
    error_field = FieldFile.from_flat(field.grid, result.v_hat.v_hat)
    write_field(calibrated, out / "calibrated.csv")
    write_field(error_field, out / "error.csv")
    if args.heatmaps:
        write_heatmap(calibrated, out / "calibrated.pgm")
        write_heatmap(error_field, out / "error.pgm")

    report_doc = {
        "field": {
            "nx": field.grid.nx,
            "ny": field.grid.ny,
            "dx": field.grid.dx,
            "dy": field.grid.dy,
            "x0": field.grid.x0,
            "y0": field.grid.y0,
            "n_points": problem.n_points,
        },
        "params": {
            "alpha": params.alpha,
            "sigma_m": params.sigma_m,
            "sigma_d": params.sigma_d,
            "solver": params.solver,
            "rank": params.n_samples,
            "rowsum_mode": params.rowsum_mode,
        },
        "lambda": result.lam,
        "solver": result.solver_used,
        "sensors": sensor_records,
        "holdout_sensors": holdout_records,
        "evaluation": evaluation,
        "timings": {
            "solve_s": solve_seconds,
            "total_s": time.perf_counter() - t0,
        },
    }
    (out / "report.json").write_text(
        json.dumps(report_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {out / 'calibrated.csv'}, {out / 'error.csv'}, {out / 'report.json'}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    field = read_field(args.field)
    sensor_rows = read_sensors(args.sensors)
    pairs, _ = _snap_all(field.grid, sensor_rows, "calibration")
    problem = CalibrationProblem.from_grid(field.grid, field.flat(), pairs)
    params = _make_params(args, problem.n_points)

    holdout_rows = read_sensors(args.holdout)
    holdout_pairs, _ = _snap_all(field.grid, holdout_rows, "holdout")

    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"--values must be a comma-separated float list: {exc}") from exc
    axis = args.axis.replace("-", "_")
    entries = sweep(problem, params, axis, values, holdout_pairs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["value,rmse_before,rmse_after,improvement,max_abs_v,support_area_fraction"]
    for e in entries:
        lines.append(
            ",".join(
                format(v, ".10g")
                for v in (
                    e.value,
                    e.report.rmse_before,
                    e.report.rmse_after,
                    e.report.improvement,
                    e.max_abs_v,
                    e.support_area_fraction,
                )
            )
        )
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'sweep.csv'} ({len(entries)} rows)")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    case = make_case(
        seed=args.seed,
        nx=args.nx,
        ny=args.ny,
        spacing=args.spacing,
        n_calib=args.calib,
        n_holdout=args.holdout,
    )
    grid = case.problem.grid
    assert grid is not None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_field(FieldFile.from_flat(grid, case.ground_truth), out / "truth.csv")
    write_field(FieldFile.from_flat(grid, case.problem.values), out / "field.csv")

    def sensor_rows(indexes: np.ndarray) -> list[tuple[float, float, float]]:
        rows = []
        for i in indexes:
            col, row = int(i) % grid.nx, int(i) // grid.nx
            rows.append(
                (
                    grid.x0 + col * grid.dx,
                    grid.y0 + row * grid.dy,
                    float(case.ground_truth[i]),
                )
            )
        return rows

    write_sensors(sensor_rows(case.calib_sensors), out / "sensors.csv")
    write_sensors(sensor_rows(case.holdout_sensors), out / "holdout.csv")
    print(f"wrote truth.csv, field.csv, sensors.csv, holdout.csv to {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"fieldcal: error: {exc}", file=sys.stderr)
        return EXIT_BAD_FLAG
    try:
        return args.func(args)
    except (FieldFormatError, SensorFormatError) as exc:
        print(f"fieldcal: error: {exc}", file=sys.stderr)
        return EXIT_BAD_FILE
    except (NotPositiveDefiniteError, RankDeficiencyError) as exc:
        print(f"fieldcal: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DenseSizeError, ValueError) as exc:
        print(f"fieldcal: error: {exc}", file=sys.stderr)
        return EXIT_BAD_FLAG


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
