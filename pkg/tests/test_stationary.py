import math

import numpy as np
import pytest

from nrdf import (BudgetInfeasible, SingularA, StationaryProblem,
                  StationaryTestChannelSpec, StructureNotSatisfied,
                  StructureTag, SystemModel, classify_structure,
                  dare_solve, kh_bound, reverse_waterfill_stationary,
                  scalar_closed_form, stationary_rate)
from nrdf.errors import SingularPosterior
from nrdf.riccati import SteadyState

from .conftest import EXAMPLE3_D, EXAMPLE3_RATE_BITS


def synthetic_problem(A, Sigma_bar, budget, Sigma=None):
    """Stationary instance with a hand-picked steady state (the waterfill
    consumes only A, Sigma_bar and the floor)."""
    A = np.asarray(A, dtype=float)
    p = A.shape[0]
    Sigma = np.eye(p) * 0.5 if Sigma is None else np.asarray(Sigma, dtype=float)
    Sigma_bar = np.asarray(Sigma_bar, dtype=float)
    steady = SteadyState(Pi=Sigma + Sigma_bar, Sigma=Sigma, Sigma_bar=Sigma_bar,
                         d_min_infty=float(np.trace(Sigma)))
    model = SystemModel(A=A, C=np.eye(p), Sigma_w=np.eye(p), Sigma_n=np.zeros((p, p)),
                        Sigma_x0=np.eye(p))
    return StationaryProblem(model=model, steady=steady,
                             D=float(np.trace(Sigma)) + budget)


class TestClassifyStructure:
    def test_scalar_state_matrix(self, example2_model):
        steady = dare_solve(example2_model)
        structure = classify_structure(example2_model.A, steady.Sigma_bar)
        assert structure.tag is StructureTag.SCALAR_A
        np.testing.assert_allclose(structure.mu_A2, 1.44, rtol=1e-12)
        # pairing is by eigenvector: basis must diagonalize Sigma_bar
        V = structure.common_basis
        recon = (V * structure.mu_Sigma_bar) @ V.T
        np.testing.assert_allclose(recon, steady.Sigma_bar, atol=1e-9)

    def test_symmetric_state_with_scalar_noise(self):
        A = np.array([[0.9, 0.2], [0.2, 0.5]])
        structure = classify_structure(A, 2.0 * np.eye(2))
        assert structure.tag is StructureTag.SYMMETRIC_A_SCALAR_NOISE
        np.testing.assert_allclose(np.sort(structure.mu_A2),
                                   np.sort(np.linalg.eigvalsh(A)**2), rtol=1e-12)
        np.testing.assert_allclose(structure.mu_Sigma_bar, 2.0)

    def test_state_equal_to_noise(self):
        M = np.array([[1.0, 0.3], [0.3, 0.8]])
        structure = classify_structure(M, M)
        assert structure.tag is StructureTag.A_EQUALS_NOISE
        np.testing.assert_allclose(structure.mu_Sigma_bar**2, structure.mu_A2, rtol=1e-12)

    def test_unstructured_pair(self):
        structure = classify_structure([[1.0, 0.3], [0.0, 1.0]], np.eye(2))
        assert structure.tag is StructureTag.NONE
        assert structure.common_basis is None

    def test_commutation_holds_on_match(self, example2_model):
        steady = dare_solve(example2_model)
        A, Sb = example2_model.A, steady.Sigma_bar
        scale = max(np.max(np.abs(A)), np.max(np.abs(Sb)))
        assert np.max(np.abs(A @ Sb - Sb @ A)) <= 1e-9 * scale**2


class TestReverseWaterfillStationary:
    def test_scalar_reduces_to_closed_form(self, example3_model):
        steady = dare_solve(example3_model, tol=1e-13)
        for D in (2.0, EXAMPLE3_D, 4.0, 9.0):
            problem = StationaryProblem(model=example3_model, steady=steady, D=D)
            wf = reverse_waterfill_stationary(problem, eps=1e-12)
            assert abs(wf.rate - scalar_closed_form(problem)) <= 1e-10

    def test_two_eigenvalue_case_against_frozen_grid(self):
        # 1-D grid over the budget split (refined to 1e-10) froze rate
        # 0.6293671342359017 at allocation (0.46667, 0.33333); the second
        # direction clips at its ceiling 1/3.
        problem = synthetic_problem(0.5 * np.eye(2), np.diag([1.0, 0.25]), 0.8)
        wf = reverse_waterfill_stationary(problem, eps=1e-11)
        assert wf.rate == pytest.approx(0.6293671342359017, abs=1e-4)
        np.testing.assert_allclose(np.sort(wf.mu_post),
                                   np.sort([0.4666666668, 0.3333333332]), atol=1e-4)

    @pytest.mark.parametrize("seed", range(5))
    def test_small_instances_match_grid_search(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(2, 4))
        alpha = rng.uniform(0.3, 1.5)
        mu_sb = rng.uniform(0.2, 3.0, size=p)
        budget = rng.uniform(0.2, 1.0) * mu_sb.sum()
        cap = np.where(alpha**2 < 1, mu_sb / max(1 - alpha**2, 1e-12), np.inf)
        budget = min(budget, 0.9 * cap.sum())
        problem = synthetic_problem(alpha * np.eye(p), np.diag(mu_sb), budget)
        wf = reverse_waterfill_stationary(problem, eps=1e-11)
        assert wf.rate <= _grid_min_rate(alpha**2 * np.ones(p), mu_sb, budget) + 1e-3

    def test_prior_identity_is_exact(self, example2_model):
        steady = dare_solve(example2_model)
        problem = StationaryProblem(model=example2_model, steady=steady,
                                    D=steady.d_min_infty + 2.0)
        wf = reverse_waterfill_stationary(problem)
        structure = classify_structure(example2_model.A, steady.Sigma_bar)
        np.testing.assert_array_equal(
            wf.mu_prior, structure.mu_A2 * wf.mu_post + structure.mu_Sigma_bar)

    def test_budget_tightness(self, example2_model):
        steady = dare_solve(example2_model)
        for budget in (0.05, 0.7, 3.0):
            problem = StationaryProblem(model=example2_model, steady=steady,
                                        D=steady.d_min_infty + budget)
            wf = reverse_waterfill_stationary(problem, eps=1e-9)
            assert abs(wf.mu_post.sum() - budget) <= 1e-9 * 1.01

    def test_singular_increment_regularized(self):
        problem = synthetic_problem(0.8 * np.eye(2), np.diag([1.0, 0.0]), 0.5)
        wf = reverse_waterfill_stationary(problem)
        assert math.isfinite(wf.rate) and wf.rate > 0
        # the degenerate direction gets essentially no allocation
        assert np.min(wf.mu_post) <= 1e-9

    def test_saturation_gives_zero_rate(self):
        problem = synthetic_problem(0.5 * np.eye(2), np.diag([1.0, 0.25]), 2.0)
        # ceilings sum to 4/3 + 1/3 < 2: budget slack, zero rate
        wf = reverse_waterfill_stationary(problem)
        assert wf.rate == 0.0

    def test_unstructured_pair_rejected(self):
        A = np.array([[1.0, 0.3], [0.0, 1.0]])
        steady = SteadyState(Pi=2 * np.eye(2), Sigma=np.eye(2), Sigma_bar=np.eye(2),
                             d_min_infty=2.0)
        model = SystemModel(A=A, C=np.eye(2), Sigma_w=np.eye(2),
                            Sigma_n=np.zeros((2, 2)), Sigma_x0=np.eye(2))
        problem = StationaryProblem(model=model, steady=steady, D=3.0)
        with pytest.raises(StructureNotSatisfied):
            reverse_waterfill_stationary(problem)


class TestScalarClosedForm:
    def test_scalar_benchmark_rate(self, example3_model):
        problem = StationaryProblem.from_model(example3_model, EXAMPLE3_D)
        assert scalar_closed_form(problem) == pytest.approx(EXAMPLE3_RATE_BITS, abs=1e-3)

    def test_fully_observable_special_case(self):
        model = SystemModel.scalar(0.9, 1.0, 0.8, 0.0)
        for D in (0.3, 0.9, 2.0):
            problem = StationaryProblem.from_model(model, D)
            expected = max(0.5 * math.log2(0.81 + 0.8 / D), 0.0)
            assert scalar_closed_form(problem) == pytest.approx(expected, abs=1e-9)

    def test_zero_rate_region(self):
        model = SystemModel.scalar(0.6, 1.0, 0.5, 0.4)
        steady = dare_solve(model)
        sbar = steady.Sigma_bar[0, 0]
        D = steady.d_min_infty + sbar / (1 - 0.36) + 0.1
        problem = StationaryProblem(model=model, steady=steady, D=D)
        assert scalar_closed_form(problem) == 0.0

    def test_infeasible_budget_rejected(self, example3_model):
        steady = dare_solve(example3_model)
        with pytest.raises(BudgetInfeasible):
            StationaryProblem(model=example3_model, steady=steady, D=1.0)


class TestComparisonBound:
    def test_matches_scalar_closed_form_at_p_equal_one(self, example3_model):
        steady = dare_solve(example3_model, tol=1e-13)
        for D in (2.0, EXAMPLE3_D, 5.0, 40.0):
            problem = StationaryProblem(model=example3_model, steady=steady, D=D)
            assert abs(kh_bound(problem) - scalar_closed_form(problem)) <= 1e-10

    def test_lower_bounds_the_waterfill_on_vector_benchmark(self, example2_model):
        # Uniform-allocation closed form is a converse: it sits below the
        # exact solution, with the documented worst gap near one bit.
        steady = dare_solve(example2_model)
        gaps = []
        for budget in np.logspace(-4, np.log10(25.0), 30):
            problem = StationaryProblem(model=example2_model, steady=steady,
                                        D=steady.d_min_infty + budget)
            gaps.append(reverse_waterfill_stationary(problem).rate - kh_bound(problem))
        gaps = np.array(gaps)
        assert np.all(gaps >= -1e-9)
        assert 0.9 <= gaps.max() <= 1.2

    def test_tight_at_low_distortion(self, example2_model):
        # Frozen sweep: gap 0.00214 bits at budget 1e-4.
        steady = dare_solve(example2_model)
        problem = StationaryProblem(model=example2_model, steady=steady,
                                    D=steady.d_min_infty + 1e-4)
        gap = reverse_waterfill_stationary(problem).rate - kh_bound(problem)
        assert abs(gap) <= 0.05
        assert gap == pytest.approx(0.002144, abs=5e-4)

    def test_singular_state_matrix_rejected(self):
        problem = synthetic_problem(np.diag([0.0, 0.5]), np.eye(2), 0.5)
        with pytest.raises(SingularA):
            kh_bound(problem)


class TestStationaryRate:
    def test_equal_pair_has_zero_rate(self):
        M = np.array([[2.0, 0.3], [0.3, 1.0]])
        spec = StationaryTestChannelSpec(Sigma_xi=M, Pi_xi=M, rate=0.0)
        assert stationary_rate(spec) == 0.0

    def test_diagonal_spec_matches_eigen_rate(self, example2_model):
        steady = dare_solve(example2_model)
        problem = StationaryProblem(model=example2_model, steady=steady,
                                    D=steady.d_min_infty + 1.5)
        wf = reverse_waterfill_stationary(problem, eps=1e-11)
        spec = StationaryTestChannelSpec.from_eigen(wf)
        assert abs(stationary_rate(spec) - wf.rate) <= 1e-10

    def test_singular_posterior_rejected(self):
        spec = StationaryTestChannelSpec(Sigma_xi=np.diag([1.0, 0.0]),
                                         Pi_xi=np.diag([2.0, 1.0]), rate=0.0)
        with pytest.raises(SingularPosterior):
            stationary_rate(spec)


class TestRateDistortionCurve:
    def test_monotone_and_convex(self, example2_model):
        steady = dare_solve(example2_model)
        budgets = np.linspace(0.2, 12.0, 25)
        rates = []
        for b in budgets:
            problem = StationaryProblem(model=example2_model, steady=steady,
                                        D=steady.d_min_infty + b)
            rates.append(reverse_waterfill_stationary(problem).rate)
        rates = np.array(rates)
        assert np.all(np.diff(rates) <= 1e-9)
        slopes = np.diff(rates) / np.diff(budgets)
        assert np.all(np.diff(slopes) >= -1e-6)


def _eig(M):
    return np.linalg.eigvalsh(M)


def _grid_min_rate(mu_a2, mu_sb, budget, rounds=5, steps=None):
    """Exhaustive search over the budget simplex honoring per-direction caps.

    Grids the free coordinates (log plus linear spacing, since optima can sit
    orders of magnitude apart) and refines iteratively around the incumbent.
    Supports p = 2 and p = 3.
    """
    mu_a2 = np.asarray(mu_a2, dtype=float)
    mu_sb = np.asarray(mu_sb, dtype=float)
    p = len(mu_a2)
    assert p in (2, 3)
    cap = np.where(mu_a2 < 1, mu_sb / np.maximum(1 - mu_a2, 1e-12), np.inf)
    if steps is None:
        steps = 2048 if p == 2 else 120

    def rates(pts):
        last = budget - pts.sum(axis=1)
        mu = np.column_stack([pts, last])
        ok = np.all(mu > 0, axis=1) & np.all(mu <= cap * (1 + 1e-12), axis=1)
        safe = np.where(mu > 0, mu, 1.0)
        vals = 0.5 * np.sum(np.log2((mu_a2 * safe + mu_sb) / safe), axis=1)
        return np.where(ok, vals, np.inf)

    lo = np.full(p - 1, 1e-9 * budget)
    hi = np.minimum(cap[:p - 1], budget)
    best, best_pt = np.inf, None
    for _ in range(rounds):
        axes = [np.unique(np.concatenate([
                    np.geomspace(lo[i], hi[i], steps // 2),
                    np.linspace(lo[i], hi[i], steps // 2)]))
                for i in range(p - 1)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = rates(pts)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_pt = float(vals[i]), pts[i]
        if best_pt is None:
            break
        span = (hi / np.maximum(lo, 1e-300)) ** (1.0 / steps)
        shrink = np.maximum(span**4, 1.0 + 1e-12)
        lo = np.maximum(best_pt / shrink, 1e-12 * budget)
        hi = np.minimum(best_pt * shrink, np.minimum(cap[:p - 1], budget))
    return best
