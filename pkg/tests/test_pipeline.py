import dataclasses

import numpy as np
import pytest

from fieldcal import (
    CalibrationParams,
    CalibrationProblem,
    CalibrationResult,
    ErrorEstimate,
    calibrate,
    evaluate,
    lambda_from_alpha,
    sweep,
)
from fieldcal.synth import make_case
from helpers import benign_problem

PARAMS = CalibrationParams(sigma_m=2.0, sigma_d=3.0, alpha=0.5)


def fake_result(problem, f_hat):
    """A hand-built result for exercising evaluate in isolation."""
    f_hat = np.asarray(f_hat, dtype=np.float64)
    return CalibrationResult(
        v_hat=ErrorEstimate(problem.values - f_hat),
        f_hat=f_hat,
        params_used=PARAMS,
        lam=0.5,
        solver_used="dense",
    )


class TestCalibrate:
    def test_zero_residuals_leave_field_unchanged(self):
        rng = np.random.default_rng(1)
        pos = rng.uniform(0, 2, (30, 2))
        vals = 24.0 + rng.uniform(0, 2, 30)
        sensors = [(4, float(vals[4])), (19, float(vals[19]))]
        prob = CalibrationProblem(pos, vals, sensors)
        result = calibrate(prob, PARAMS)
        assert np.all(result.v_hat.v_hat == 0.0)
        np.testing.assert_array_equal(result.f_hat, prob.values)

    def test_single_point_correction(self):
        prob = CalibrationProblem([[0.0, 0.0]], [26.0], [(0, 25.6)])
        result = calibrate(prob, PARAMS)
        assert result.v_hat.v_hat[0] == pytest.approx(0.4, rel=1e-12)
        assert result.f_hat[0] == pytest.approx(25.6, rel=1e-12)

    def test_constant_residual_shifts_whole_field(self):
        rng = np.random.default_rng(2)
        prob0, params = benign_problem(rng, n_max=50)
        c = 1.3
        sensors = [(int(i), float(prob0.values[i] - c)) for i in prob0.sensor_indices]
        prob = CalibrationProblem(prob0.positions, prob0.values, sensors)
        result = calibrate(prob, params)
        np.testing.assert_allclose(result.f_hat, prob.values - c, atol=1e-10)

    def test_dispatch_and_metadata(self):
        rng = np.random.default_rng(3)
        prob, params = benign_problem(rng, n_max=40)
        lr = dataclasses.replace(params, solver="lowrank", n_samples=6)
        result = calibrate(prob, lr)
        assert result.solver_used == "lowrank"
        assert result.params_used is lr
        assert result.lam == lambda_from_alpha(
            params.alpha, prob.n_sensors, prob.n_points
        )

    def test_correction_identity(self):
        rng = np.random.default_rng(4)
        prob, params = benign_problem(rng, n_max=40)
        result = calibrate(prob, params)
        np.testing.assert_array_equal(
            result.f_hat, prob.values - result.v_hat.v_hat
        )

    def test_adjustment_bounded_by_largest_residual(self):
        # dense path with exact row sums: no point moves further than the
        # largest sensor residual magnitude
        rng = np.random.default_rng(6)
        from fieldcal import sensor_residuals

        for _ in range(5):
            prob, params = benign_problem(rng, n_max=80)
            result = calibrate(prob, params)
            moved = np.abs(result.f_hat - prob.values).max()
            assert moved <= np.abs(sensor_residuals(prob)).max() + 1e-10

    def test_stronger_sensor_trust_tightens_fit_at_calibration_sensors(self):
        case = make_case(seed=9)
        prob = case.problem
        calib = [(int(i), float(case.ground_truth[i])) for i in case.calib_sensors]
        rmse_after = {}
        for alpha in (0.01, 1.0):
            params = CalibrationParams(sigma_m=1000.0, sigma_d=1.0, alpha=alpha)
            rmse_after[alpha] = evaluate(
                prob, calibrate(prob, params), calib
            ).rmse_after
        assert rmse_after[0.01] < rmse_after[1.0]


class TestEvaluate:
    def test_reported_improvement_formula(self):
        # one holdout point carrying the before/after magnitudes directly
        prob = CalibrationProblem(
            [[0.0, 0.0], [1.0, 0.0]], [25.0, 26.0], [(0, 25.0)]
        )
        s = 26.0 - 1.1197
        f_hat = [25.0, s + 0.6794]
        report = evaluate(prob, fake_result(prob, f_hat), [(1, s)])
        assert report.rmse_before == pytest.approx(1.1197, abs=1e-12)
        assert report.rmse_after == pytest.approx(0.6794, abs=1e-12)
        assert report.improvement == pytest.approx(0.3932, abs=1e-4)

    def test_perfect_calibration(self):
        prob = CalibrationProblem(
            [[0.0, 0.0], [1.0, 0.0]], [25.0, 26.0], [(0, 25.0)]
        )
        report = evaluate(prob, fake_result(prob, [25.0, 24.5]), [(1, 24.5)])
        assert report.rmse_after == 0.0
        assert report.improvement == 1.0

    def test_unchanged_field_gives_zero_improvement(self):
        prob = CalibrationProblem(
            [[0.0, 0.0], [1.0, 0.0]], [25.0, 26.0], [(0, 25.0)]
        )
        report = evaluate(prob, fake_result(prob, [25.0, 26.0]), [(1, 24.5)])
        assert report.improvement == 0.0
        assert report.rmse_after == report.rmse_before

    def test_per_sensor_entries(self):
        prob = CalibrationProblem(
            [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            [25.0, 26.0, 27.0],
            [(0, 25.0)],
        )
        report = evaluate(
            prob, fake_result(prob, [25.0, 25.5, 27.2]), [(1, 25.4), (2, 27.0)]
        )
        assert report.per_sensor == (
            (1, pytest.approx(0.6), pytest.approx(0.1)),
            (2, pytest.approx(0.0), pytest.approx(0.2)),
        )

    def test_validation(self):
        prob = CalibrationProblem([[0.0, 0.0]], [25.0], [(0, 25.0)])
        result = fake_result(prob, [25.0])
        with pytest.raises(ValueError):
            evaluate(prob, result, [])
        with pytest.raises(ValueError):
            evaluate(prob, result, [(5, 24.0)])

    def test_pure(self):
        rng = np.random.default_rng(5)
        prob, params = benign_problem(rng, n_max=30)
        result = calibrate(prob, params)
        holdout = [(0, float(prob.values[0] - 0.2))]
        assert evaluate(prob, result, holdout) == evaluate(prob, result, holdout)


@pytest.fixture(scope="module")
def small_case():
    case = make_case(seed=1, nx=24, ny=12, spacing=0.3, n_calib=4, n_holdout=3)
    return case.problem, case.holdout_pairs()


class TestSweep:
    def test_alpha_sweep_shape_and_order(self, small_case):
        prob, holdout = small_case
        values = [1.0, 0.5, 0.1, 0.01]
        entries = sweep(prob, PARAMS, "alpha", values, holdout)
        assert [e.value for e in entries] == values
        for e in entries:
            assert e.max_abs_v >= 0.0
            assert 0.0 <= e.support_area_fraction <= 1.0

    def test_axis_substitution(self, small_case):
        prob, holdout = small_case
        entries = sweep(prob, PARAMS, "sigma_d", [0.5, 2.0], holdout)
        assert len(entries) == 2

    def test_support_fraction_definition(self, small_case):
        prob, holdout = small_case
        base = CalibrationParams(sigma_m=1000.0, sigma_d=1.0, alpha=0.1)
        (entry,) = sweep(prob, base, "alpha", [0.1], holdout)
        result = calibrate(prob, base)
        abs_v = np.abs(result.v_hat.v_hat)
        expected = np.count_nonzero(abs_v > 0.05 * abs_v.max()) / abs_v.size
        assert entry.support_area_fraction == pytest.approx(expected, rel=0)

    def test_validation(self, small_case):
        prob, holdout = small_case
        with pytest.raises(ValueError):
            sweep(prob, PARAMS, "beta", [0.1], holdout)
        with pytest.raises(ValueError):
            sweep(prob, PARAMS, "alpha", [], holdout)
        with pytest.raises(ValueError):
            sweep(prob, PARAMS, "alpha", [-0.5], holdout)
        with pytest.raises(ValueError):
            sweep(prob, PARAMS, "alpha", [1.5], holdout)
        with pytest.raises(ValueError):
            sweep(prob, PARAMS, "sigma_m", [0.0], holdout)
