import math

import numpy as np
import pytest

from nrdf import (BudgetInfeasible, FiniteHorizonProblem, InfeasibleStage,
                  SystemModel, TimeVaryingSystemModel, pointwise_closed_form,
                  reverse_waterfill_finite, scalar_filter_variances,
                  waterfill_stage)
from nrdf.finite import _allocate
from nrdf.stationary import StationaryProblem, scalar_closed_form
from nrdf.riccati import dare_solve

from .conftest import EXAMPLE3_D, EXAMPLE3_RATE_BITS, EXAMPLE3_SIGMA


def scalar_problem(alpha, c, sw, sn, sx0, n, D):
    model = TimeVaryingSystemModel.from_time_invariant(
        SystemModel.scalar(alpha, c, sw, sn, sx0), n)
    return FiniteHorizonProblem.from_model(model, D)


class TestWaterfillStage:
    def test_terminal_level(self):
        assert waterfill_stage(0.5, terminal=True) == pytest.approx(1.0)

    def test_beta_equal_theta(self):
        for value in (0.3, 1.0, 2.5):
            assert waterfill_stage(value, beta=value) == \
                pytest.approx((math.sqrt(2.0) - 1.0) / value)

    def test_small_beta_limit_is_terminal_level(self):
        # Series expansion: (sqrt(1 + b/t) - 1) / b -> 1 / (2 t) as b -> 0.
        theta = 0.7
        assert waterfill_stage(theta, beta=1e-10) == \
            pytest.approx(waterfill_stage(theta, terminal=True), rel=1e-8)
        assert waterfill_stage(theta, beta=0.0) == waterfill_stage(theta, terminal=True)

    def test_strictly_decreasing_in_theta(self):
        thetas = np.linspace(0.05, 5.0, 40)
        levels = [waterfill_stage(t, beta=1.3) for t in thetas]
        assert np.all(np.diff(levels) < 0)


class TestReverseWaterfillFinite:
    def test_long_horizon_matches_stationary_benchmark(self, example3_model):
        problem = scalar_problem(1.1, 0.5, 1.0, 1.0, 1.0, 100_000, EXAMPLE3_D)
        sol = reverse_waterfill_finite(problem)
        assert sol.normalized_rate == pytest.approx(EXAMPLE3_RATE_BITS, abs=1e-2)
        assert problem.d_min == pytest.approx(EXAMPLE3_SIGMA, abs=1e-2)

    def test_single_stage_closed_form(self):
        problem = scalar_problem(1.0, 1.0, 1.0, 1.0, 1.0, 0, 0.8)
        sol = reverse_waterfill_finite(problem)
        budget = 0.8 - problem.d_min
        assert sol.post_var[0] == pytest.approx(budget, abs=1e-9)
        expected = max(0.5 * math.log2(problem.sigma_upsilon[0] / budget), 0.0)
        assert sol.total_rate == pytest.approx(expected, abs=1e-7)

    def test_two_stage_against_frozen_grid_search(self):
        # Brute-force grid over the two-variable distortion simplex
        # (refined to 1e-10 steps) froze rate 1.160964047443681 at
        # allocation (0.3, 0.4); D = d_min + 0.35 with d_min = 0.55.
        problem = scalar_problem(1.0, 1.0, 1.0, 1.0, 1.0, 1, 0.9)
        assert problem.d_min == pytest.approx(0.55, abs=1e-12)
        sol = reverse_waterfill_finite(problem)
        assert sol.total_rate == pytest.approx(1.160964047443681, abs=1e-3)
        np.testing.assert_allclose(sol.post_var, [0.3, 0.4], atol=1e-3)

    def test_budget_tightness(self):
        for D in (2.0, 2.4, 3.0, 6.0):
            problem = scalar_problem(1.1, 0.5, 1.0, 1.0, 1.0, 50, D)
            sol = reverse_waterfill_finite(problem, eps=1e-9)
            assert abs(sol.post_var.mean() - problem.budget) <= 1e-9 * 1.01

    def test_clipping_keeps_posterior_below_prior(self):
        problem = scalar_problem(0.6, 1.0, 0.4, 0.7, 2.0, 30, 1.2)
        sol = reverse_waterfill_finite(problem)
        assert np.all(sol.post_var <= sol.prior_var + 1e-15)
        assert np.all(sol.stage_rates >= 0.0)

    def test_rate_monotone_in_distortion(self):
        rates = []
        for D in np.linspace(1.9, 8.0, 22):
            problem = scalar_problem(1.1, 0.5, 1.0, 1.0, 1.0, 40, D)
            rates.append(reverse_waterfill_finite(problem).normalized_rate)
        assert np.all(np.diff(rates) <= 1e-12)

    def test_allocation_strictly_decreasing_in_theta(self):
        # Monotonicity of the averaged allocation guarantees the bisection.
        problem = scalar_problem(1.1, 0.5, 1.0, 1.0, 1.0, 25, 2.5)
        means = [_allocate(problem, theta)[0].mean()
                 for theta in np.logspace(-3, 2, 30)]
        assert np.all(np.diff(means) < 0)

    def test_stationarity_residual_at_interior_stages(self):
        # theta must solve the per-stage first-order condition wherever the
        # allocation is unclipped.
        problem = scalar_problem(1.1, 0.5, 1.0, 1.0, 1.0, 60, 2.6)
        sol = reverse_waterfill_finite(problem, eps=1e-10)
        theta = sol.theta_star
        ups = problem.sigma_upsilon
        a = problem.model.A[:, 0, 0]
        n = problem.model.horizon
        for t in range(n + 1):
            if sol.post_var[t] >= sol.prior_var[t] - 1e-12:
                continue
            s = sol.post_var[t]
            if t == n:
                residual = -0.5 / s + theta
            else:
                residual = -0.5 * ups[t + 1] / (s * (a[t]**2 * s + ups[t + 1])) + theta
            assert abs(residual) <= 1e-6 * max(theta, 1.0)

    def test_fully_observable_recovery(self):
        # c = 1, sigma_n = 0: increments equal the process noise, the floor
        # vanishes, and the solve coincides with feeding the process-noise
        # sequence directly.
        n = 20
        model = TimeVaryingSystemModel.from_time_invariant(
            SystemModel.scalar(1.05, 1.0, 0.9, 0.0, 1.3), n)
        problem = FiniteHorizonProblem.from_model(model, 0.7)
        assert problem.d_min == pytest.approx(0.0, abs=1e-14)
        expected_ups = np.full(n + 1, 0.9)
        expected_ups[0] = 1.3
        np.testing.assert_allclose(problem.sigma_upsilon, expected_ups, atol=1e-12)
        direct = FiniteHorizonProblem(model=model, D=0.7, d_min=0.0,
                                      sigma_upsilon=expected_ups)
        sol = reverse_waterfill_finite(problem)
        sol_direct = reverse_waterfill_finite(direct)
        np.testing.assert_allclose(sol.post_var, sol_direct.post_var, rtol=1e-12)
        assert sol.total_rate == pytest.approx(sol_direct.total_rate, rel=1e-12)

    def test_saturated_budget_gives_zero_rate(self):
        # Stable model: the fully clipped allocation bounds what any budget
        # can use, so larger budgets are slack and the rate is zero.
        problem = scalar_problem(0.5, 1.0, 0.3, 0.5, 1.0, 10, 50.0)
        sol = reverse_waterfill_finite(problem)
        assert sol.total_rate == 0.0
        assert sol.theta_star == 0.0

    def test_budget_below_floor_rejected(self):
        with pytest.raises(BudgetInfeasible):
            scalar_problem(1.1, 0.5, 1.0, 1.0, 1.0, 10, 0.5)

    def test_nats_conversion(self):
        problem = scalar_problem(1.1, 0.5, 1.0, 1.0, 1.0, 20, 2.6)
        bits = reverse_waterfill_finite(problem, log_base=2)
        nats = reverse_waterfill_finite(problem, log_base=math.e)
        assert nats.total_rate == pytest.approx(bits.total_rate * math.log(2.0), rel=1e-12)


class TestPointwiseClosedForm:
    def test_zero_rates_when_targets_track_prediction(self):
        n = 6
        model = TimeVaryingSystemModel.from_time_invariant(
            SystemModel.scalar(0.9, 0.8, 0.5, 0.4, 1.0), n)
        _, post, ups = scalar_filter_variances(model)
        excess = np.empty(n + 1)
        excess[0] = ups[0]
        for t in range(n):
            excess[t + 1] = 0.81 * excess[t] + ups[t + 1]
        rates, total = pointwise_closed_form(model, post + excess, post)
        np.testing.assert_allclose(rates, 0.0, atol=1e-12)
        assert total <= 1e-12

    def test_fully_observable_pointwise_formula(self):
        # c = 1, sigma_n = 0 reduces the prediction recursion to
        # alpha^2 D_{t-1} + sigma_w^2 with a zero floor.
        n = 5
        alpha, sw, sx0 = 1.1, 0.6, 0.9
        model = TimeVaryingSystemModel.from_time_invariant(
            SystemModel.scalar(alpha, 1.0, sw, 0.0, sx0), n)
        D_t = np.linspace(0.4, 0.7, n + 1)
        rates, _ = pointwise_closed_form(model, D_t, np.zeros(n + 1))
        prior = np.empty(n + 1)
        prior[0] = sx0
        for t in range(n):
            prior[t + 1] = alpha**2 * D_t[t] + sw
        expected = np.maximum(0.5 * np.log2(prior / D_t), 0.0)
        np.testing.assert_allclose(rates, expected, rtol=1e-12)

    def test_constant_targets_converge_to_stationary_closed_form(self, example3_model):
        n = 400
        model = TimeVaryingSystemModel.from_time_invariant(example3_model, n)
        _, post, _ = scalar_filter_variances(model)
        D_t = np.full(n + 1, EXAMPLE3_D)
        rates, _ = pointwise_closed_form(model, D_t, post)
        steady = dare_solve(example3_model)
        target = scalar_closed_form(
            StationaryProblem(model=example3_model, steady=steady, D=EXAMPLE3_D))
        assert rates[-1] == pytest.approx(target, abs=1e-4)

    def test_infeasible_stage_rejected(self):
        n = 3
        model = TimeVaryingSystemModel.from_time_invariant(
            SystemModel.scalar(0.9, 0.8, 0.5, 0.4, 1.0), n)
        _, post, _ = scalar_filter_variances(model)
        bad = post.copy()
        bad[2] -= 1e-6
        with pytest.raises(InfeasibleStage, match="2"):
            pointwise_closed_form(model, bad, post)
