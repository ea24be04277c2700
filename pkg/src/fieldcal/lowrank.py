"""Column-sampled low-rank factorization and the Woodbury-based solve.

The doubled affinity matrix W_s = 2W is approximated from n sampled columns
as Z A^{-1} Z^T, where Z is the N x n block of sampled columns and A the
n x n block of their sampled rows.  The calibration system
(D - Z A^{-1} Z^T) v = b is then solved through the Woodbury identity,

    v = D^{-1} b - D^{-1} Z (-A + Z^T D^{-1} Z)^{-1} Z^T D^{-1} b,

which costs O(N n + n^3) time and O(N n) memory; no N x N object is ever
formed.  Sample columns are spread over the mesh (coarse sub-grid on grid
layouts, uniform strides otherwise) and sensor locations are always included
when the budget allows, since approximation quality matters most where the
error estimate varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve as linalg_solve

from .core import (
    CalibrationParams,
    CalibrationProblem,
    ErrorEstimate,
    FloatArray,
    GridLayout,
    IntArray,
    _affinity_block,
    lambda_from_alpha,
    row_sums_exact,
    sensor_affinity_columns,
    sensor_residuals,
)

__all__ = [
    "DEFAULT_SAMPLES",
    "EXACT_ROWSUM_CAP",
    "RankDeficiencyError",
    "LowRankFactors",
    "stratified_grid_indices",
    "uniform_stride_indices",
    "select_samples",
    "build_factors",
    "row_sums_lowrank",
    "solve_lowrank",
]

DEFAULT_SAMPLES = 100

# Exact row sums are O(N^2); beyond this they stop being tolerable.
EXACT_ROWSUM_CAP = 20_000

# Approximated row sums may dip slightly negative; D must stay positive.
ROWSUM_FLOOR = 1e-12

# Relative ridge ladder for the pivot block, scaled by trace(A)/n.  Each
# rung is snapped to a power of two so A minus its ridge reproduces the
# sampled rows of Z bit-exactly.
_RIDGE_REL_START = 1e-8
_RIDGE_REL_MAX = 1e-2


class RankDeficiencyError(RuntimeError):
    """The sampled pivot block could not be factorized even after ridging."""


@dataclass
class LowRankFactors:
    """Sampled column block Z, pivot block A (ridge included), sample list.

    The rows of Z at the sampled indexes equal A - ridge * I exactly; the
    pre-ridge diagonal of A is 2 because every point has unit self-affinity.
    """

    samples: IntArray
    Z: FloatArray
    A: FloatArray
    ridge: float
    _cho: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def pivot_cholesky(self) -> tuple:
        """Cholesky factor of A, cached; raises RankDeficiencyError on failure."""
        if self._cho is None:
            try:
                self._cho = cho_factor(self.A, lower=False, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise RankDeficiencyError(
                    "pivot block is numerically singular for samples "
                    f"{_summarize(self.samples)} (ridge={self.ridge:g})"
                ) from exc
        return self._cho


def _summarize(samples: np.ndarray, limit: int = 12) -> str:
    vals = [int(s) for s in samples[:limit]]
    tail = ", ..." if samples.shape[0] > limit else ""
    return f"[{', '.join(map(str, vals))}{tail}]"


def uniform_stride_indices(n_points: int, n: int) -> list[int]:
    """n stride-centered indexes over [0, n_points); ascending, distinct."""
    picked = sorted({int((i + 0.5) * n_points / n) for i in range(n)})
    return _fill_to(picked, n, n_points)


def stratified_grid_indices(grid: GridLayout, n: int) -> list[int]:
    """n cell-center indexes of a near-uniform coarse sub-grid, ascending.

    The coarse grid keeps the aspect ratio of the mesh, so for example four
    samples on a square grid land at the centers of the four quadrants.
    """
    nx, ny = grid.nx, grid.ny
    cx = max(1, round(math.sqrt(n * nx / ny)))
    cx = min(cx, nx)
    cy = min(max(1, math.ceil(n / cx)), ny)
    if cx * cy < n:
        cx = min(nx, math.ceil(n / cy))
    picked: list[int] = []
    seen: set[int] = set()
    for iy in range(cy):
        row = min(ny - 1, int((iy + 0.5) * ny / cy))
        for ix in range(cx):
            col = min(nx - 1, int((ix + 0.5) * nx / cx))
            idx = row * nx + col
            if idx not in seen:
                seen.add(idx)
                picked.append(idx)
    return _fill_to(sorted(picked)[:n], n, grid.n_points)


def _fill_to(picked: list[int], n: int, n_points: int) -> list[int]:
    """Top up a distinct index list to exactly n entries, deterministically."""
    if len(picked) > n:
        picked = picked[:n]
    if len(picked) < n:
        seen = set(picked)
        for cand in uniform_stride_indices(n_points, min(n_points, 2 * n)):
            if len(picked) == n:
                break
            if cand not in seen:
                seen.add(cand)
                picked.append(cand)
        for cand in range(n_points):
            if len(picked) == n:
                break
            if cand not in seen:
                seen.add(cand)
                picked.append(cand)
    return sorted(picked)


def select_samples(problem: CalibrationProblem, n: int) -> IntArray:
    """Choose n distinct, spatially spread mesh indexes for column sampling.

    Grid layouts get a coarse sub-grid, other meshes uniform strides over the
    point list.  All sensor indexes are force-included whenever n >= m.  The
    result is ascending and deterministic for fixed inputs.
    """
    n_points = problem.n_points
    if not 1 <= n <= n_points:
        raise ValueError(f"sample count must lie in [1, {n_points}], got {n}")
    if problem.grid is not None:
        base = stratified_grid_indices(problem.grid, n)
    else:
        base = uniform_stride_indices(n_points, n)
    if n >= problem.n_sensors:
        forced = [int(i) for i in problem.sensor_indices]
        seen = set(forced)
        merged = forced + [c for c in base if c not in seen]
        base = _fill_to(sorted(merged[:n]), n, n_points)
    return np.asarray(base, dtype=np.int64)


def build_factors(
    problem: CalibrationProblem,
    samples: np.ndarray,
    params: CalibrationParams,
) -> LowRankFactors:
    """Evaluate the sampled columns of W_s and the ridged pivot block.

    Costs O(N * n) kernel evaluations.  The ridge starts near
    1e-8 * trace(A)/n and escalates by decades (snapped to powers of two)
    until the pivot block factorizes, up to a relative ridge of 1e-2; past
    that the sample set is reported as rank deficient.
    """
    samples = np.asarray(samples, dtype=np.int64)
    n = samples.shape[0]
    if n < 1 or samples.min() < 0 or samples.max() >= problem.n_points:
        raise ValueError("samples must be non-empty mesh indexes")
    if len(np.unique(samples)) != n:
        raise ValueError("samples must be distinct")

    z = _affinity_block(problem.positions, problem.values, slice(None), samples, params)
    z *= 2.0
    a0 = z[samples, :]
    scale = float(np.trace(a0)) / n

    rel = _RIDGE_REL_START
    last_exc: Exception | None = None
    while rel <= _RIDGE_REL_MAX * (1 + 1e-12):
        ridge = 2.0 ** round(math.log2(rel * scale))
        a = a0 + ridge * np.eye(n)
        try:
            cho = cho_factor(a, lower=False, check_finite=False)
        except np.linalg.LinAlgError as exc:
            last_exc = exc
            rel *= 10.0
            continue
        factors = LowRankFactors(samples=samples, Z=z, A=a, ridge=ridge)
        factors._cho = cho
        return factors
    raise RankDeficiencyError(
        f"pivot block stayed singular up to relative ridge {_RIDGE_REL_MAX:g} "
        f"for samples {_summarize(samples)}"
    ) from last_exc


def row_sums_lowrank(factors: LowRankFactors) -> FloatArray:
    """Row sums of the approximated W_s, i.e. Z (A^{-1} (Z^T 1)).

    Entries are clamped below at a small positive floor so the diagonal they
    feed stays positive.  Costs O(N n + n^3); bit-deterministic for fixed
    factors.
    """
    cho = factors.pivot_cholesky()
    col_tot = factors.Z.sum(axis=0)
    r = factors.Z @ cho_solve(cho, col_tot, check_finite=False)
    return np.maximum(r, ROWSUM_FLOOR)


def solve_lowrank(
    problem: CalibrationProblem, params: CalibrationParams
) -> ErrorEstimate:
    """Solve the calibration system through the sampled factorization.

    The sensor part of the diagonal is always exact (O(N m) kernel
    evaluations); the affinity row-sum part follows params.rowsum_mode.  The
    n x n inner system is solved by a symmetric factorization, never by
    explicit inversion.
    """
    n_points = problem.n_points
    if params.rowsum_mode == "exact" and n_points > EXACT_ROWSUM_CAP:
        raise ValueError(
            f"exact row sums are capped at {EXACT_ROWSUM_CAP} points, got "
            f"{n_points}; use rowsum_mode='lowrank'"
        )
    n = params.n_samples if params.n_samples is not None else min(DEFAULT_SAMPLES, n_points)
    lam = lambda_from_alpha(params.alpha, problem.n_sensors, n_points)

    samples = select_samples(problem, n)
    factors = build_factors(problem, samples, params)

    cols = sensor_affinity_columns(problem, params)
    sensor_diag = cols.sum(axis=1) / lam
    if params.rowsum_mode == "exact":
        row_part = 2.0 * row_sums_exact(problem, params)
    else:
        row_part = row_sums_lowrank(factors)
    d = sensor_diag + row_part
    if not (d > 0.0).all():
        raise RuntimeError("internal invariant violation: diagonal entry <= 0")

    b = (cols @ sensor_residuals(problem)) / lam
    dinv_b = b / d
    zd = factors.Z / d[:, None]
    inner = factors.Z.T @ zd
    inner -= factors.A
    rhs = factors.Z.T @ dinv_b
    try:
        y = linalg_solve(inner, rhs, assume_a="sym", check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            "inner Woodbury matrix is singular for samples "
            f"{_summarize(factors.samples)}"
        ) from exc
    v = dinv_b - zd @ y
    return ErrorEstimate(v)
