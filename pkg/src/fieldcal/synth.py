"""Deterministic synthetic calibration cases.

Stands in for field data that cannot be shipped: a smooth ground-truth field
(a warm base level plus a few seeded Gaussian plumes), a smooth injected
simulation error, and two disjoint sensor sets whose observations equal the
ground truth exactly.

The injected error has the signature of a displaced flow structure: a strong
dipole (adjacent over- and under-predicted Gaussian bumps of equal magnitude)
toward one end of the domain, plus a weak, nearly self-cancelling second pair
sitting on flat ground truth inboard of it.  The weak pair marks a zone the
simulation gets essentially right; the sensors placed on it read near-zero
residuals and anchor the estimated error to zero across the rest of the
domain, which is how a real deployment behaves when some sensors confirm the
simulation.  Calibration sensors are dropped near the four distinct bumps;
holdout sensors come from seeded draws around the strong pair, restricted to
points where the injected error is non-trivial, since scoring a correction
where nothing is wrong says nothing.  Everything is a pure function of the
seed and the shape arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CalibrationProblem, FloatArray, GridLayout, IntArray

__all__ = ["SyntheticCase", "make_case", "rmse"]

BASE_LEVEL = 24.0


@dataclass(frozen=True)
class SyntheticCase:
    """A generated problem with known ground truth and injected error."""

    ground_truth: FloatArray
    problem: CalibrationProblem
    injected_error: FloatArray
    calib_sensors: IntArray
    holdout_sensors: IntArray
    seed: int

    def holdout_pairs(self) -> list[tuple[int, float]]:
        """(mesh_index, observation) pairs for the held-out sensors."""
        return [(int(i), float(self.ground_truth[i])) for i in self.holdout_sensors]


def _gaussian_mixture(
    positions: FloatArray,
    centers: FloatArray,
    amplitudes: FloatArray,
    widths: FloatArray,
) -> FloatArray:
    out = np.zeros(positions.shape[0])
    for c, a, w in zip(centers, amplitudes, widths):
        d2 = ((positions - c) ** 2).sum(axis=1)
        out += a * np.exp(-d2 / (2.0 * w * w))
    return out


def _snap(grid: GridLayout, x: float, y: float) -> int:
    col = int(np.clip(round((x - grid.x0) / grid.dx), 0, grid.nx - 1))
    row = int(np.clip(round((y - grid.y0) / grid.dy), 0, grid.ny - 1))
    return row * grid.nx + col


def _place_near(
    grid: GridLayout,
    rng: np.random.Generator,
    target: np.ndarray,
    jitter: float,
    taken: set[int],
) -> int:
    """Nearest free mesh index to a jittered target; deterministic fallback scan."""
    for _ in range(64):
        x, y = target + rng.normal(0.0, jitter, size=2)
        idx = _snap(grid, float(x), float(y))
        if idx not in taken:
            return idx
        jitter *= 1.5
    pos = grid.positions()
    order = np.argsort(((pos - target) ** 2).sum(axis=1), kind="stable")
    for idx in order:
        if int(idx) not in taken:
            return int(idx)
    raise ValueError("no free mesh point left for sensor placement")


def make_case(
    seed: int,
    nx: int = 80,
    ny: int = 40,
    spacing: float = 0.1,
    n_calib: int = 4,
    n_holdout: int = 4,
    error_scale: float = 1.0,
) -> SyntheticCase:
    """Generate a synthetic case; bit-identical for identical arguments.

    The ground truth is BASE_LEVEL plus 3 to 6 plumes (amplitude 1 to 4,
    width 0.3 to 1.5 m).  The injected error is four signed bumps (amplitude
    0.5 to 2, width at least 1 m) scaled by ``error_scale``: a strong
    displaced-plume dipole near the right end plus a weak self-cancelling
    pair on flat truth inboard of it.  Observations equal the ground truth,
    so the calibration residuals equal the injected error at the calibration
    sensors.
    """
    if nx < 4 or ny < 4:
        raise ValueError(f"grid must be at least 4x4, got nx={nx} ny={ny}")
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    if n_calib < 1:
        raise ValueError(f"need at least one calibration sensor, got {n_calib}")
    if n_holdout < 0:
        raise ValueError(f"holdout count must be >= 0, got {n_holdout}")
    n_points = nx * ny
    if n_calib + n_holdout > n_points:
        raise ValueError(
            f"{n_calib} + {n_holdout} sensors oversubscribe {n_points} mesh points"
        )

    rng = np.random.default_rng(seed)
    grid = GridLayout(nx=nx, ny=ny, dx=spacing, dy=spacing)
    positions = grid.positions()
    width_m = (nx - 1) * spacing
    height_m = (ny - 1) * spacing

    n_plumes = int(rng.integers(3, 7))
    truth_centers = rng.uniform([0.0, 0.0], [width_m, height_m], size=(n_plumes, 2))
    truth_amps = rng.uniform(1.0, 4.0, size=n_plumes)
    truth_widths = rng.uniform(0.3, 1.5, size=n_plumes)
    ground_truth = BASE_LEVEL + _gaussian_mixture(
        positions, truth_centers, truth_amps, truth_widths
    )

    # Strong dipole: the simulated plume sits offset from the real one, so
    # the simulation over-predicts on one side and under-predicts on the
    # other by the same amount.
    strong_amp = rng.uniform(1.4, 2.0)
    strong_width = rng.uniform(1.0, 1.3)
    strong_x = (0.84 + rng.uniform(-0.02, 0.02)) * width_m
    strong_y = (0.5 + rng.uniform(-0.04, 0.04)) * height_m
    strong_sep = rng.uniform(1.3, 1.6) * strong_width
    c_over = np.array([strong_x, min(strong_y + 0.5 * strong_sep, height_m)])
    c_under = np.array([strong_x, max(strong_y - 0.5 * strong_sep, 0.0)])

    # Weak pair: nearly coincident opposite bumps on the flattest ground
    # truth inboard of the dipole; the residual there is close to zero.
    weak_amp = rng.uniform(0.5, 0.6)
    weak_width = rng.uniform(1.0, 1.2)
    band = (
        (positions[:, 0] >= 0.52 * width_m)
        & (positions[:, 0] <= 0.72 * width_m)
        & (positions[:, 1] >= 0.25 * height_m)
        & (positions[:, 1] <= 0.75 * height_m)
    )
    flatness = np.where(band, np.abs(ground_truth - BASE_LEVEL), np.inf)
    if not np.isfinite(flatness).any():
        flatness = np.abs(ground_truth - BASE_LEVEL)
    weak_base = positions[int(np.argmin(flatness))] + rng.uniform(-0.15, 0.15, size=2)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    weak_sep = rng.uniform(0.25, 0.35) * weak_width
    offset = 0.5 * weak_sep * np.array([np.cos(angle), np.sin(angle)])

    err_centers = np.array([c_over, c_under, weak_base + offset, weak_base - offset])
    err_amps = np.array([strong_amp, -strong_amp, weak_amp, -weak_amp])
    err_widths = np.array([strong_width, strong_width, weak_width, weak_width])
    n_bumps = 4
    bumps = error_scale * _gaussian_mixture(positions, err_centers, err_amps, err_widths)

    field = ground_truth + bumps
    # Re-derive the error as field - truth so the decomposition is bit-exact.
    injected_error = field - ground_truth

    taken: set[int] = set()
    calib: list[int] = []
    for k in range(n_calib):
        bump = k % n_bumps
        target = np.clip(err_centers[bump], [0.0, 0.0], [width_m, height_m])
        idx = _place_near(grid, rng, target, 0.1 * err_widths[bump], taken)
        taken.add(idx)
        calib.append(idx)

    # Holdout sensors validate the calibration, so they are drawn around the
    # strong dipole where the injected error is non-trivial, mirroring
    # validation sensors placed in regions the simulation actually gets wrong.
    holdout: list[int] = []
    if n_holdout > 0:
        abs_err = np.abs(injected_error)
        floor = 0.25 * float(abs_err.max())
        for k in range(n_holdout):
            bump = k % 2
            jitter = min(0.35 * err_widths[bump], 0.7)
            idx = -1
            for _ in range(40):
                target = err_centers[bump] + rng.normal(0.0, jitter, size=2)
                cand = _snap(grid, float(target[0]), float(target[1]))
                if cand not in taken and abs_err[cand] >= floor:
                    idx = cand
                    break
            if idx < 0:
                for cand in np.argsort(-abs_err, kind="stable"):
                    if int(cand) not in taken:
                        idx = int(cand)
                        break
            taken.add(idx)
            holdout.append(idx)

    calib_idx = np.asarray(calib, dtype=np.int64)
    holdout_idx = np.asarray(holdout, dtype=np.int64)
    problem = CalibrationProblem.from_grid(
        grid, field, [(int(i), float(ground_truth[i])) for i in calib_idx]
    )
    return SyntheticCase(
        ground_truth=ground_truth,
        problem=problem,
        injected_error=injected_error,
        calib_sensors=calib_idx,
        holdout_sensors=holdout_idx,
        seed=seed,
    )


def rmse(a: np.ndarray, b: np.ndarray, at: np.ndarray) -> float:
    """Root mean square of (a - b) over the given index list."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"value lists differ in length: {a.shape} vs {b.shape}")
    at = np.asarray(at, dtype=np.int64)
    if at.size == 0:
        raise ValueError("index list must be non-empty")
    if at.min() < 0 or at.max() >= a.shape[0]:
        raise ValueError(f"index out of range [0, {a.shape[0]})")
    d = a[at] - b[at]
    return float(np.sqrt(np.mean(d * d)))
