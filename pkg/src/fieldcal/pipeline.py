"""End-to-end calibration, holdout evaluation, and parameter sweeps.

Calibration estimates the simulation error v at every mesh point and applies
it as f_hat = f_c - v_hat.  Evaluation scores a calibration against held-out
observations that were never shown to the solver, reporting RMSE before and
after plus the relative improvement.  Sweeps rerun the calibration along one
parameter axis and collect, per value, the evaluation report together with
the magnitude and spatial support of the estimated error.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .core import (
    CalibrationParams,
    CalibrationProblem,
    ErrorEstimate,
    FloatArray,
    lambda_from_alpha,
)
from .dense import assemble_dense, solve_dense
from .lowrank import solve_lowrank

__all__ = [
    "SUPPORT_THRESHOLD",
    "CalibrationResult",
    "EvaluationReport",
    "SweepEntry",
    "calibrate",
    "evaluate",
    "sweep",
]

SweepAxis = Literal["alpha", "sigma_m", "sigma_d"]

# A point counts toward the support area when |v_i| exceeds this fraction of
# the peak |v|; declared once, not tuned.
SUPPORT_THRESHOLD = 0.05


@dataclass(frozen=True)
class CalibrationResult:
    """Estimated error field, calibrated field, and the settings that made them."""

    v_hat: ErrorEstimate
    f_hat: FloatArray
    params_used: CalibrationParams
    lam: float
    solver_used: str


@dataclass(frozen=True)
class EvaluationReport:
    """Holdout scores: RMSE before/after and relative improvement.

    improvement = (rmse_before - rmse_after) / rmse_before when rmse_before
    is positive, and 0.0 for the degenerate all-zero-residual case.
    per_sensor holds (mesh_index, signed error before, signed error after).
    """

    rmse_before: float
    rmse_after: float
    improvement: float
    per_sensor: tuple[tuple[int, float, float], ...]


@dataclass(frozen=True)
class SweepEntry:
    value: float
    report: EvaluationReport
    max_abs_v: float
    support_area_fraction: float


def calibrate(
    problem: CalibrationProblem, params: CalibrationParams
) -> CalibrationResult:
    """Estimate the error field and return the corrected field f_c - v_hat."""
    lam = lambda_from_alpha(params.alpha, problem.n_sensors, problem.n_points)
    if params.solver == "dense":
        estimate = solve_dense(assemble_dense(problem, params))
    elif params.solver == "lowrank":
        estimate = solve_lowrank(problem, params)
    else:  # unreachable through CalibrationParams validation
        raise ValueError(f"unknown solver {params.solver!r}")
    f_hat = problem.values - estimate.v_hat
    return CalibrationResult(
        v_hat=estimate,
        f_hat=f_hat,
        params_used=params,
        lam=lam,
        solver_used=params.solver,
    )


def evaluate(
    problem: CalibrationProblem,
    result: CalibrationResult,
    holdout: Sequence[tuple[int, float]],
) -> EvaluationReport:
    """Score a calibration against held-out observations.

    The holdout set must be non-empty and reference valid mesh indexes; it is
    never fed back into the solver.
    """
    pairs = list(holdout)
    if not pairs:
        raise ValueError("holdout set must be non-empty")
    idx = np.array([int(i) for i, _ in pairs], dtype=np.int64)
    obs = np.array([float(s) for _, s in pairs], dtype=np.float64)
    if idx.min() < 0 or idx.max() >= problem.n_points:
        raise ValueError(
            f"holdout mesh_index out of range [0, {problem.n_points}): "
            f"{idx[(idx < 0) | (idx >= problem.n_points)]}"
        )
    err_before = problem.values[idx] - obs
    err_after = result.f_hat[idx] - obs
    rmse_before = float(np.sqrt(np.mean(err_before**2)))
    rmse_after = float(np.sqrt(np.mean(err_after**2)))
    improvement = (
        (rmse_before - rmse_after) / rmse_before if rmse_before > 0.0 else 0.0
    )
    per_sensor = tuple(
        (int(i), float(be), float(ae))
        for i, be, ae in zip(idx, err_before, err_after)
    )
    return EvaluationReport(
        rmse_before=rmse_before,
        rmse_after=rmse_after,
        improvement=improvement,
        per_sensor=per_sensor,
    )


def sweep(
    problem: CalibrationProblem,
    base: CalibrationParams,
    axis: SweepAxis,
    values: Sequence[float],
    holdout: Sequence[tuple[int, float]],
) -> list[SweepEntry]:
    """Calibrate once per value of one parameter axis, in the given order.

    Each entry carries the holdout evaluation, the peak |v_hat|, and the
    fraction of mesh points where |v_hat| exceeds SUPPORT_THRESHOLD times
    that peak.
    """
    if axis not in ("alpha", "sigma_m", "sigma_d"):
        raise ValueError(f"axis must be alpha, sigma_m or sigma_d, got {axis!r}")
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("values must be non-empty")
    for v in vals:
        if not v > 0:
            raise ValueError(f"{axis} values must be positive, got {v}")
        if axis == "alpha" and v > 1:
            raise ValueError(f"alpha values must be <= 1, got {v}")

    entries = []
    for v in vals:
        params = dataclasses.replace(base, **{axis: v})
        result = calibrate(problem, params)
        report = evaluate(problem, result, holdout)
        abs_v = np.abs(result.v_hat.v_hat)
        peak = float(abs_v.max())
        support = (
            float(np.count_nonzero(abs_v > SUPPORT_THRESHOLD * peak) / abs_v.size)
            if peak > 0.0
            else 0.0
        )
        entries.append(
            SweepEntry(
                value=v,
                report=report,
                max_abs_v=peak,
                support_area_fraction=support,
            )
        )
    return entries
