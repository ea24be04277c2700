"""Domain types and the affinity kernel shared by the dense and low-rank solvers.

A calibration problem couples a simulated scalar field, sampled on N mesh
points, with m trusted point observations taken at a subset of those points.
Similarity between mesh points is the product of two Gaussians, one in field
value and one in position:

    w(p, q) = exp(-(f_p - f_q)^2 / sigma_m) * exp(-|x_p - x_q|^2 / sigma_d)

so two points are strongly coupled only when they are both near each other
and carry similar simulated values.  Everything in this module is a pure
function over immutable inputs and is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]

RowsumMode = Literal["exact", "lowrank"]
SolverKind = Literal["dense", "lowrank"]

__all__ = [
    "MeshPoint",
    "GridLayout",
    "CalibrationParams",
    "CalibrationProblem",
    "ErrorEstimate",
    "affinity",
    "sensor_residuals",
    "lambda_from_alpha",
    "sensor_affinity_columns",
    "row_sums_exact",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a)
    if out is a:
        out = a.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MeshPoint:
    """One mesh location (2D or 3D, meters) with its simulated field value."""

    position: tuple[float, ...]
    value: float

    def __post_init__(self) -> None:
        if len(self.position) not in (2, 3):
            raise ValueError(
                f"position must have 2 or 3 components, got {len(self.position)}"
            )
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"position components must be finite, got {self.position}")
        if not math.isfinite(self.value):
            raise ValueError(f"value must be finite, got {self.value}")


@dataclass(frozen=True)
class GridLayout:
    """Regular 2D mesh, row-major: point k sits at column k % nx, row k // nx."""

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid shape must be positive, got nx={self.nx} ny={self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"grid spacing must be positive, got dx={self.dx} dy={self.dy}")
        if not (math.isfinite(self.x0) and math.isfinite(self.y0)):
            raise ValueError(f"grid origin must be finite, got ({self.x0}, {self.y0})")

    @property
    def n_points(self) -> int:
        return self.nx * self.ny

    def positions(self) -> FloatArray:
        """All mesh positions as an (nx*ny, 2) array in row-major point order."""
        xs = self.x0 + np.arange(self.nx, dtype=np.float64) * self.dx
        ys = self.y0 + np.arange(self.ny, dtype=np.float64) * self.dy
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class CalibrationParams:
    """Solver parameters.

    sigma_m is the decay scale of the value-similarity Gaussian (squared field
    units); sigma_d the decay scale of the spatial Gaussian (squared meters).
    alpha in (0, 1] sets the balance factor lambda = alpha * m / N, trading
    fidelity at the sensors against smoothness of the estimated error.
    n_samples is the column-sample count for the low-rank path (None means
    min(100, N), resolved at solve time).
    """

    sigma_m: float
    sigma_d: float
    alpha: float
    n_samples: int | None = None
    rowsum_mode: RowsumMode = "lowrank"
    solver: SolverKind = "dense"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma_m) and self.sigma_m > 0):
            raise ValueError(f"sigma_m must be a positive finite real, got {self.sigma_m}")
        if not (math.isfinite(self.sigma_d) and self.sigma_d > 0):
            raise ValueError(f"sigma_d must be a positive finite real, got {self.sigma_d}")
        if not (math.isfinite(self.alpha) and 0 < self.alpha <= 1):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n_samples is not None and self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.rowsum_mode not in ("exact", "lowrank"):
            raise ValueError(f"rowsum_mode must be 'exact' or 'lowrank', got {self.rowsum_mode!r}")
        if self.solver not in ("dense", "lowrank"):
            raise ValueError(f"solver must be 'dense' or 'lowrank', got {self.solver!r}")


class CalibrationProblem:
    """Simulated field values on mesh points plus sparse trusted observations.

    Positions are an (N, d) array in raw meters (d = 2 or 3), values an (N,)
    array of simulated field values, and sensors a sequence of
    (mesh_index, observed_value) pairs.  Sensor indexes must be distinct mesh
    indexes; every sensing location is a mesh point.  Arrays are stored
    read-only, so a problem can be shared freely across threads.
    """

    def __init__(
        self,
        positions: np.ndarray,
        values: np.ndarray,
        sensors: Sequence[tuple[int, float]],
        grid: GridLayout | None = None,
    ) -> None:
        positions = np.asarray(positions, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] not in (2, 3):
            raise ValueError(
                f"positions must be an (N, 2) or (N, 3) array, got shape {positions.shape}"
            )
        n = positions.shape[0]
        if n < 1:
            raise ValueError("a problem needs at least one mesh point")
        if values.shape != (n,):
            raise ValueError(
                f"values must have shape ({n},) to match positions, got {values.shape}"
            )
        if not np.isfinite(positions).all():
            raise ValueError("positions contain non-finite entries")
        if not np.isfinite(values).all():
            raise ValueError("values contain non-finite entries")

        pairs = list(sensors)
        if len(pairs) < 1:
            raise ValueError("a problem needs at least one sensor")
        if len(pairs) > n:
            raise ValueError(f"more sensors ({len(pairs)}) than mesh points ({n})")
        idx = np.array([int(i) for i, _ in pairs], dtype=np.int64)
        obs = np.array([float(s) for _, s in pairs], dtype=np.float64)
        if idx.min() < 0 or idx.max() >= n:
            raise ValueError(
                f"sensor mesh_index out of range [0, {n}): {idx[(idx < 0) | (idx >= n)]}"
            )
        if len(np.unique(idx)) != len(idx):
            raise ValueError("sensor mesh indexes must be distinct")
        if not np.isfinite(obs).all():
            raise ValueError("sensor observations contain non-finite entries")

        if grid is not None:
            if grid.n_points != n:
                raise ValueError(
                    f"grid has {grid.n_points} points but {n} values were given"
                )
            if positions.shape[1] != 2 or not np.array_equal(positions, grid.positions()):
                raise ValueError("positions do not match the row-major grid layout")

        self._positions = _readonly(positions)
        self._values = _readonly(values)
        self._sensor_indices = _readonly(idx)
        self._sensor_values = _readonly(obs)
        self._grid = grid

    @classmethod
    def from_grid(
        cls,
        grid: GridLayout,
        values: np.ndarray,
        sensors: Sequence[tuple[int, float]],
    ) -> "CalibrationProblem":
        """Build a problem on a regular grid, synthesizing the positions."""
        return cls(grid.positions(), values, sensors, grid=grid)

    @classmethod
    def from_points(
        cls,
        points: Sequence[MeshPoint],
        sensors: Sequence[tuple[int, float]],
        grid: GridLayout | None = None,
    ) -> "CalibrationProblem":
        positions = np.array([p.position for p in points], dtype=np.float64)
        values = np.array([p.value for p in points], dtype=np.float64)
        return cls(positions, values, sensors, grid=grid)

    @property
    def positions(self) -> FloatArray:
        return self._positions

    @property
    def values(self) -> FloatArray:
        return self._values

    @property
    def sensor_indices(self) -> IntArray:
        return self._sensor_indices

    @property
    def sensor_values(self) -> FloatArray:
        return self._sensor_values

    @property
    def grid(self) -> GridLayout | None:
        return self._grid

    @property
    def n_points(self) -> int:
        return self._positions.shape[0]

    @property
    def n_sensors(self) -> int:
        return self._sensor_indices.shape[0]

    def point(self, i: int) -> MeshPoint:
        return MeshPoint(tuple(self._positions[i]), float(self._values[i]))

    @property
    def points(self) -> list[MeshPoint]:
        """All mesh points as MeshPoint objects (materialized on demand)."""
        return [self.point(i) for i in range(self.n_points)]

    @property
    def sensors(self) -> list[tuple[int, float]]:
        return [
            (int(i), float(s))
            for i, s in zip(self._sensor_indices, self._sensor_values)
        ]

    def __repr__(self) -> str:
        return (
            f"CalibrationProblem(n_points={self.n_points}, "
            f"n_sensors={self.n_sensors}, grid={self._grid!r})"
        )


@dataclass(frozen=True)
class ErrorEstimate:
    """Estimated simulation error at every mesh point (field units)."""

    v_hat: FloatArray

    def __post_init__(self) -> None:
        v = np.asarray(self.v_hat, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError(f"v_hat must be one-dimensional, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("v_hat contains non-finite entries")
        object.__setattr__(self, "v_hat", _readonly(v))

    def __len__(self) -> int:
        return self.v_hat.shape[0]


def affinity(p: MeshPoint, q: MeshPoint, params: CalibrationParams) -> float:
    """Gaussian-product similarity of two mesh points.

    Returns exp(-(f_p - f_q)^2 / sigma_m) * exp(-|x_p - x_q|^2 / sigma_d),
    which lies in (0, 1], is symmetric in (p, q), and equals 1 exactly when
    the two points share both position and value.
    """
    if len(p.position) != len(q.position):
        raise ValueError("points must have the same spatial dimension")
    df = p.value - q.value
    dsq = sum((a - b) ** 2 for a, b in zip(p.position, q.position))
    return math.exp(-(df * df) / params.sigma_m) * math.exp(-dsq / params.sigma_d)


def _affinity_block(
    positions: FloatArray,
    values: FloatArray,
    rows: np.ndarray | slice,
    cols: np.ndarray,
    params: CalibrationParams,
) -> FloatArray:
    """Affinities of the ``rows`` points against the ``cols`` points.

    Vectorized form of :func:`affinity`; the product-of-two-exponentials
    structure is kept so entries agree with the scalar path to machine
    precision.
    """
    pr = positions[rows]
    vr = values[rows]
    pc = positions[cols]
    vc = values[cols]
    dsq = cdist(pr, pc, "sqeuclidean")
    dsq /= -params.sigma_d
    np.exp(dsq, out=dsq)
    dv = vr[:, None] - vc[None, :]
    np.multiply(dv, dv, out=dv)
    dv /= -params.sigma_m
    np.exp(dv, out=dv)
    dsq *= dv
    return dsq


def sensor_residuals(problem: CalibrationProblem) -> FloatArray:
    """Per-sensor residual e_k = simulated value minus observation, in sensor order."""
    return problem.values[problem.sensor_indices] - problem.sensor_values


def lambda_from_alpha(alpha: float, m: int, n_points: int) -> float:
    """Balance factor lambda = alpha * m / N for m sensors on N mesh points.

    alpha = 1 weights one sensor observation like one mesh value; smaller
    alpha trusts the observations more.
    """
    if not (0 < alpha <= 1):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not (1 <= m <= n_points):
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={n_points}")
    return alpha * m / n_points


def sensor_affinity_columns(
    problem: CalibrationProblem, params: CalibrationParams
) -> FloatArray:
    """The N x m block of affinities between every mesh point and each sensor.

    Column k holds w(point_i, point_{l_k}) for all i; the entry at the
    sensor's own row is exactly 1.  Costs O(N * m) kernel evaluations.
    """
    return _affinity_block(
        problem.positions,
        problem.values,
        slice(None),
        problem.sensor_indices,
        params,
    )


def row_sums_exact(
    problem: CalibrationProblem,
    params: CalibrationParams,
    block_rows: int | None = None,
) -> FloatArray:
    """Exact affinity row sums r_i = sum_j w_ij, including the w_ii = 1 self term.

    O(N^2) kernel evaluations, computed in row blocks so no N x N array is
    ever held; each r_i lies in [1, N].  Intended for meshes small enough
    that the quadratic cost is acceptable.
    """
    n = problem.n_points
    if block_rows is None:
        block_rows = max(1, min(n, 4_000_000 // n))
    out = np.empty(n, dtype=np.float64)
    all_cols = np.arange(n)
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        block = _affinity_block(
            problem.positions,
            problem.values,
            slice(start, stop),
            all_cols,
            params,
        )
        out[start:stop] = block.sum(axis=1)
    return out
