"""Shared instance generators and independent oracles for the test suite.

The brute-force objective and its gradient-descent minimizer are written
against the raw double-sum objective with scalar math, independent of the
package's assembly and solve paths, so they can act as an oracle for them.
"""

from __future__ import annotations

import math

import numpy as np

from fieldcal import CalibrationParams, CalibrationProblem


def benign_problem(rng: np.random.Generator, n_max: int = 300):
    """Random instance whose affinities stay far from zero.

    Positions sit inside a 2 m box with sigma_d of a few box sizes and
    sigma_m comfortably above the squared value spread, so every kernel
    weight is at least about exp(-3).  Used where solver-agreement bounds
    are asserted at tight tolerances.
    """
    n = int(rng.integers(10, n_max + 1))
    m = int(rng.integers(1, min(8, n) + 1))
    dim = int(rng.choice([2, 3]))
    pos = rng.uniform(0.0, 2.0, (n, dim))
    vals = 24.0 + rng.uniform(0.0, 3.0, n)
    idx = rng.choice(n, m, replace=False)
    resid = rng.uniform(-1.0, 1.0, m)
    sensors = [(int(i), float(vals[i] - r)) for i, r in zip(idx, resid)]
    params = CalibrationParams(
        sigma_m=float(rng.uniform(9.0, 36.0)),
        sigma_d=float(rng.uniform(4.0, 16.0)),
        alpha=float(rng.uniform(0.05, 1.0)),
    )
    return CalibrationProblem(pos, vals, sensors), params


def wide_problem(rng: np.random.Generator, n_max: int = 200):
    """Random instance over a wide parameter spread (weights may be tiny)."""
    n = int(rng.integers(5, n_max + 1))
    m = int(rng.integers(1, min(10, n) + 1))
    pos = rng.uniform(0.0, 3.0, (n, 2))
    vals = 20.0 + rng.uniform(0.0, 6.0, n)
    idx = rng.choice(n, m, replace=False)
    resid = rng.uniform(-2.0, 2.0, m)
    sensors = [(int(i), float(vals[i] - r)) for i, r in zip(idx, resid)]
    params = CalibrationParams(
        sigma_m=float(rng.uniform(1.0, 50.0)),
        sigma_d=float(rng.uniform(0.5, 20.0)),
        alpha=float(rng.uniform(0.02, 1.0)),
    )
    return CalibrationProblem(pos, vals, sensors), params


def scalar_affinity_matrix(
    problem: CalibrationProblem, params: CalibrationParams
) -> np.ndarray:
    """All-pairs affinities via plain scalar math (oracle, O(N^2) slow path)."""
    n = problem.n_points
    pos, vals = problem.positions, problem.values
    w = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            d2 = float(((pos[i] - pos[j]) ** 2).sum())
            df = float(vals[i] - vals[j])
            w[i, j] = math.exp(-(df * df) / params.sigma_m) * math.exp(
                -d2 / params.sigma_d
            )
    return w


def raw_objective(
    problem: CalibrationProblem,
    params: CalibrationParams,
    lam: float,
    v: np.ndarray,
    w: np.ndarray | None = None,
) -> float:
    """The double-sum objective sum w_{i,l_k}(v_i - e_k)^2 + lam * sum w_ij (v_i - v_j)^2."""
    if w is None:
        w = scalar_affinity_matrix(problem, params)
    e = problem.values[problem.sensor_indices] - problem.sensor_values
    cols = w[:, problem.sensor_indices]
    fidelity = float((cols * (v[:, None] - e[None, :]) ** 2).sum())
    smoothness = float((w * (v[:, None] - v[None, :]) ** 2).sum())
    return fidelity + lam * smoothness


def gradient_descent_minimize(
    problem: CalibrationProblem,
    params: CalibrationParams,
    lam: float,
    rng: np.random.Generator,
    n_starts: int = 5,
    iters: int = 2500,
) -> float:
    """Best objective value found by plain gradient descent from random starts."""
    w = scalar_affinity_matrix(problem, params)
    e = problem.values[problem.sensor_indices] - problem.sensor_values
    cols = w[:, problem.sensor_indices]
    row = w.sum(axis=1)
    # 1/L step for the quadratic: gradient Lipschitz constant is bounded by
    # 2 max_i sum_k w_{i,l_k} + 8 lam max_i sum_j w_ij.
    step = 1.0 / (2.0 * cols.sum(axis=1).max() + 8.0 * lam * row.max())
    best = math.inf
    for _ in range(n_starts):
        v = rng.uniform(e.min() - 0.5, e.max() + 0.5, problem.n_points)
        for _ in range(iters):
            grad = 2.0 * (cols * (v[:, None] - e[None, :])).sum(axis=1)
            grad += 4.0 * lam * (row * v - w @ v)
            v = v - step * grad
        best = min(best, raw_objective(problem, params, lam, v, w=w))
    return best
