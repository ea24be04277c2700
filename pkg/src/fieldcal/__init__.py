"""Calibration of simulated scalar fields from sparse trusted observations.

The package corrects a simulated field (for example a CFD thermal map) using
a handful of point measurements: it estimates the simulation error as the
minimizer of an affinity-weighted quadratic objective and subtracts it from
the field.  Small meshes are solved exactly (``dense``); large ones through a
column-sampled low-rank factorization and the Woodbury identity
(``lowrank``).
"""

from .core import (
    CalibrationParams,
    CalibrationProblem,
    ErrorEstimate,
    GridLayout,
    MeshPoint,
    affinity,
    lambda_from_alpha,
    row_sums_exact,
    sensor_affinity_columns,
    sensor_residuals,
)
from .dense import (
    DENSE_SIZE_CAP,
    DenseSizeError,
    DenseSystem,
    NotPositiveDefiniteError,
    assemble_dense,
    solve_dense,
)
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
from .lowrank import (
    DEFAULT_SAMPLES,
    LowRankFactors,
    RankDeficiencyError,
    build_factors,
    row_sums_lowrank,
    select_samples,
    solve_lowrank,
)
from .pipeline import (
    CalibrationResult,
    EvaluationReport,
    SweepEntry,
    calibrate,
    evaluate,
    sweep,
)
from .synth import SyntheticCase, make_case, rmse

__version__ = "0.1.0"

__all__ = [
    "CalibrationParams",
    "CalibrationProblem",
    "ErrorEstimate",
    "GridLayout",
    "MeshPoint",
    "affinity",
    "lambda_from_alpha",
    "row_sums_exact",
    "sensor_affinity_columns",
    "sensor_residuals",
    "DENSE_SIZE_CAP",
    "DenseSizeError",
    "DenseSystem",
    "NotPositiveDefiniteError",
    "assemble_dense",
    "solve_dense",
    "DEFAULT_SAMPLES",
    "LowRankFactors",
    "RankDeficiencyError",
    "build_factors",
    "row_sums_lowrank",
    "select_samples",
    "solve_lowrank",
    "CalibrationResult",
    "EvaluationReport",
    "SweepEntry",
    "calibrate",
    "evaluate",
    "sweep",
    "SyntheticCase",
    "make_case",
    "rmse",
    "FieldFile",
    "FieldFormatError",
    "SensorFormatError",
    "read_field",
    "read_sensors",
    "snap_sensor",
    "write_field",
    "write_heatmap",
    "write_sensors",
]
