"""Exact assembly and solve of the calibration system, for small meshes.

Minimizing

    (1/lam) * sum_{i,k} w_{i,l_k} (v_i - e_k)^2  +  sum_{i,j} w_ij (v_i - v_j)^2

over the error field v is a linear problem H v = b with

    H   = D - W_s,        W_s = 2 W
    D_i = (1/lam) * sum_k w_{i,l_k} + 2 * sum_j w_ij
    b_i = (1/lam) * sum_k e_k * w_{i,l_k}

H is symmetric positive definite for any lam > 0: the smoothness part is
twice the graph Laplacian of the (strictly positive) affinity weights, which
is PSD, and the sensor part is a strictly positive diagonal.  The additive
constant of the quadratic form does not move the minimizer and is not stored.

This path materializes the full N x N affinity matrix and is the correctness
oracle for the low-rank solver as well as the production path for small N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import (
    CalibrationParams,
    CalibrationProblem,
    ErrorEstimate,
    FloatArray,
    _affinity_block,
    lambda_from_alpha,
    sensor_residuals,
)

__all__ = [
    "DENSE_SIZE_CAP",
    "DenseSizeError",
    "NotPositiveDefiniteError",
    "DenseSystem",
    "assemble_dense",
    "solve_dense",
]

# H holds N^2 doubles, about 200 MB at the default cap.
DENSE_SIZE_CAP = 5000


class DenseSizeError(ValueError):
    """Mesh too large for the dense path; use the lowrank solver."""


class NotPositiveDefiniteError(RuntimeError):
    """Cholesky failed; H is PD by construction, so the input is corrupted."""


@dataclass(frozen=True)
class DenseSystem:
    """Materialized quadratic form: H = diag(D) - 2 W, right-hand side b."""

    H: FloatArray
    D: FloatArray
    b: FloatArray
    lam: float


def assemble_dense(
    problem: CalibrationProblem,
    params: CalibrationParams,
    size_cap: int = DENSE_SIZE_CAP,
) -> DenseSystem:
    """Build the dense system for ``problem``.

    Costs O(N^2) kernel evaluations and memory; raises DenseSizeError beyond
    ``size_cap`` points.  H is symmetric to machine precision (exactly, since
    the affinity evaluation is symmetric in its arguments).
    """
    n = problem.n_points
    if n > size_cap:
        raise DenseSizeError(
            f"dense assembly capped at {size_cap} points, got {n}; use the lowrank solver"
        )
    lam = lambda_from_alpha(params.alpha, problem.n_sensors, n)

    w = _affinity_block(
        problem.positions, problem.values, slice(None), np.arange(n), params
    )
    cols = w[:, problem.sensor_indices]
    e = sensor_residuals(problem)

    d = cols.sum(axis=1) / lam + 2.0 * w.sum(axis=1)
    b = (cols @ e) / lam

    h = w
    h *= -2.0
    h[np.diag_indices(n)] += d

    if not (np.isfinite(d).all() and np.isfinite(b).all()):
        raise ValueError("dense assembly produced non-finite entries")
    return DenseSystem(H=h, D=d, b=b, lam=lam)


def solve_dense(system: DenseSystem) -> ErrorEstimate:
    """Solve H v = b by Cholesky factorization.

    One iterative-refinement step is applied if the first solve leaves a
    relative residual above 1e-12, keeping the result well inside the 1e-10
    residual contract even for ill-conditioned instances.
    """
    h, b = system.H, system.b
    try:
        factor = cho_factor(h, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "Cholesky factorization failed; the assembled system should be "
            "positive definite, so its inputs are corrupted"
        ) from exc
    v = cho_solve(factor, b, check_finite=False)
    b_norm = float(np.linalg.norm(b))
    if b_norm > 0.0:
        r = b - h @ v
        if float(np.linalg.norm(r)) > 1e-12 * b_norm:
            v = v + cho_solve(factor, r, check_finite=False)
    return ErrorEstimate(v)
