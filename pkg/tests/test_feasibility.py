import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feaslearn import feasibility as fs
from feaslearn import models, oracle
from feaslearn.data import Batch
from feaslearn.errors import NumericError, ParameterError

nonneg_vec = st.lists(st.floats(0, 10), min_size=1, max_size=8).map(np.array)


class TestViolations:
    def test_basic_subtraction(self):
        assert fs.violations([0.8], 0.51).tolist() == pytest.approx([0.29])

    def test_boundary_is_zero(self):
        g = np.array([0.3, 0.7])
        assert np.all(fs.violations(g, g) == 0.0)

    def test_strictly_feasible_is_negative(self):
        assert fs.violations([0.3], 0.51)[0] == pytest.approx(-0.21)


class TestDualSteps:
    def test_fl_one_step(self):
        out = fs.dual_step_fl(np.array([0.0]), np.array([0.29]), 0.1)
        assert out[0] == pytest.approx(0.029)

    def test_fl_projection_clamps_at_zero(self):
        out = fs.dual_step_fl(np.array([0.05]), np.array([-1.0]), 0.1)
        assert out[0] == 0.0

    def test_fl_feasible_fixed_point(self):
        lam = np.zeros(4)
        v = np.array([-0.1, -0.5, 0.0, -2.0])
        for _ in range(50):
            lam = fs.dual_step_fl(lam, v, 0.3)
        assert np.all(lam == 0.0)

    def test_rfl_one_step(self):
        out = fs.dual_step_rfl(np.array([1.0]), np.array([0.0]), 0.1, 2.0)
        assert out[0] == pytest.approx(0.95)

    def test_rfl_converges_to_alpha_times_violation(self):
        lam = np.array([0.0])
        for _ in range(10_000):
            lam = fs.dual_step_rfl(lam, np.array([0.3]), 0.1, 1.0)
        assert lam[0] == pytest.approx(0.3, abs=1e-9)

    def test_infinite_alpha_reproduces_fl_exactly(self):
        lam = np.array([0.2, 0.0, 1.5])
        v = np.array([0.3, -0.2, 0.05])
        fl_out = fs.dual_step_fl(lam, v, 0.07)
        rfl_out = fs.dual_step_rfl(lam, v, 0.07, math.inf)
        assert np.array_equal(fl_out, rfl_out)

    def test_rejects_bad_steps(self):
        with pytest.raises(ParameterError):
            fs.dual_step_fl(np.zeros(1), np.zeros(1), 0.0)
        with pytest.raises(ParameterError):
            fs.dual_step_rfl(np.zeros(1), np.zeros(1), 0.1, 0.0)

    def test_non_finite_update_raises_numeric_error(self):
        with pytest.raises(NumericError):
            fs.dual_step_fl(np.array([1e308]), np.array([1e308]), 1e5)

    @settings(max_examples=40, deadline=None)
    @given(lam=nonneg_vec, seed=st.integers(0, 1000))
    def test_nonnegativity_after_any_step_sequence(self, lam, seed):
        rng = np.random.default_rng(seed)
        for _ in range(20):
            v = rng.normal(scale=3.0, size=lam.shape)
            lam = fs.dual_step_rfl(lam, v, 0.2, 2.0)
        assert lam.min() >= 0.0

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_rfl_boundedness_under_bounded_violations(self, seed):
        # eta/alpha <= 1 and |v| <= V keep every multiplier below alpha*V
        rng = np.random.default_rng(seed)
        alpha, eta, V = 2.0, 1.0, 3.0
        lam = np.zeros(5)
        for _ in range(200):
            v = rng.uniform(-V, V, size=5)
            lam = fs.dual_step_rfl(lam, v, eta, alpha)
            assert lam.max() <= alpha * V + 1e-9


class TestLagrangians:
    def test_zero_multipliers_give_zero(self):
        assert fs.lagrangian_fl([0.3, 0.9], 0.5, np.zeros(2)) == 0.0
        assert fs.lagrangian_alpha([0.3, 0.9], 0.5, np.zeros(2), 2.0) == 0.0

    def test_hand_value(self):
        assert fs.lagrangian_fl([0.6], 0.51, [0.18]) == pytest.approx(0.0162)

    def test_feasible_point_keeps_value_nonpositive(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            g = rng.uniform(0, 1, 4)
            eps = g + rng.uniform(0, 1, 4)  # strictly feasible
            lam = rng.uniform(0, 5, 4)
            assert fs.lagrangian_fl(g, eps, lam) <= 0.0

    def test_regularized_hand_value(self):
        assert fs.lagrangian_alpha([0.6], 0.51, [0.18], 2.0) == pytest.approx(0.0081)

    def test_strict_concavity_in_multipliers(self):
        g, eps, alpha = np.array([0.7, 0.1]), 0.3, 1.5
        rng = np.random.default_rng(1)
        for _ in range(20):
            a, b = rng.uniform(0, 3, 2), rng.uniform(0, 3, 2)
            if np.allclose(a, b):
                continue
            mid = fs.lagrangian_alpha(g, eps, (a + b) / 2, alpha)
            ends = 0.5 * (fs.lagrangian_alpha(g, eps, a, alpha) + fs.lagrangian_alpha(g, eps, b, alpha))
            assert mid > ends

    def test_slack_form_at_optimal_slack(self):
        val = fs.lagrangian_rfl_slack([0.6], 0.51, [0.09], [0.18], 2.0)
        assert val == pytest.approx(fs.lagrangian_alpha([0.6], 0.51, [0.18], 2.0), abs=1e-15)


class TestAnalyticDualOpt:
    def test_formula(self):
        out = fs.analytic_dual_opt([0.6, 0.3], 0.51, 2.0)
        assert np.allclose(out, [0.18, 0.0])

    def test_feasible_gives_zero_vector(self):
        out = fs.analytic_dual_opt([0.1, 0.2], 0.5, 2.0)
        assert np.all(out == 0.0)

    def test_identity_on_random_draws(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            g = rng.uniform(0, 4, n)
            eps = rng.uniform(0, 2, n)
            alpha = float(10.0 ** rng.uniform(-2, 2))
            lam_star = fs.analytic_dual_opt(g, eps, alpha)
            lhs = fs.lagrangian_alpha(g, eps, lam_star, alpha)
            assert abs(lhs - fs.cserm_objective(g, eps, alpha)) <= 1e-12

    def test_maximality_against_perturbations(self):
        rng = np.random.default_rng(3)
        g, eps, alpha = rng.uniform(0, 3, 6), rng.uniform(0, 1, 6), 1.7
        lam_star = fs.analytic_dual_opt(g, eps, alpha)
        best = fs.lagrangian_alpha(g, eps, lam_star, alpha)
        for _ in range(100):
            perturbed = np.maximum(lam_star + rng.normal(scale=0.3, size=6), 0.0)
            assert fs.lagrangian_alpha(g, eps, perturbed, alpha) <= best + 1e-12


class TestSlackView:
    def test_zero_multipliers_zero_slack(self):
        assert np.all(fs.slack_view(np.zeros(3), 2.0).u == 0.0)

    def test_recovers_violation_at_optimum(self):
        u = fs.slack_view(np.array([0.18]), 2.0).u
        assert u[0] == pytest.approx(0.09)
        assert u[0] == pytest.approx(max(0.6 - 0.51, 0.0))

    @settings(max_examples=30, deadline=None)
    @given(lam=nonneg_vec, alpha=st.floats(0.01, 100))
    def test_always_nonnegative(self, lam, alpha):
        assert fs.slack_view(lam, alpha).u.min() >= 0.0

    def test_undefined_without_finite_alpha(self):
        with pytest.raises(ParameterError):
            fs.slack_view(np.zeros(2), math.inf)


class TestCsermObjective:
    def test_hand_value(self):
        assert fs.cserm_objective([0.6, 0.3], 0.51, 2.0) == pytest.approx(0.0081)

    def test_feasible_gives_zero(self):
        assert fs.cserm_objective([0.1, 0.4], 0.5, 2.0) == 0.0

    def test_unit_alpha(self):
        assert fs.cserm_objective([1.51], 0.51, 1.0) == pytest.approx(0.5)


class TestEnvelopeGradient:
    def test_penalty_gradient_equals_weighted_gradient(self):
        rng = np.random.default_rng(4)
        model = models.MLP((2, 6, 1), task="regression")
        theta = model.init_params(0) + 0.1 * rng.normal(size=model.n_params)
        batch = Batch(np.arange(5), rng.normal(size=(5, 2)), rng.normal(size=5))
        eps, alpha = 0.3, 1.5

        g = models.per_sample_loss(models.SQUARED_ERROR, model.forward(theta, batch.features),
                                   batch.targets)
        analytic = models.weighted_loss_grad(model, theta, batch,
                                             fs.cserm_weights(g, eps, alpha),
                                             models.SQUARED_ERROR)

        def penalty(th):
            losses = models.per_sample_loss(models.SQUARED_ERROR,
                                            model.forward(th, batch.features), batch.targets)
            return fs.cserm_objective(losses, eps, alpha)

        numeric = oracle.finite_diff_grad(penalty, theta, h=1e-6)
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
        assert rel < 1e-5


class TestBookkeepingTypes:
    def test_constraint_spec_broadcast(self):
        spec = fs.ConstraintSpec.uniform(0.2, 5)
        assert spec.values.shape == (5,)
        assert np.all(spec.values == 0.2)
        assert spec.slice([1, 3]).tolist() == [0.2, 0.2]

    def test_constraint_spec_rejects_negative(self):
        with pytest.raises(ParameterError):
            fs.ConstraintSpec(np.array([0.1, -0.2]))

    def test_multiplier_state_starts_at_zero(self):
        state = fs.MultiplierState.zeros(4)
        assert np.all(state.lam == 0.0)
        assert np.all(state.last_update == -1)

    def test_multiplier_state_rejects_negative(self):
        with pytest.raises(ParameterError):
            fs.MultiplierState(np.array([-0.1]))

    def test_blowup_detection(self):
        state = fs.MultiplierState(np.array([0.0, 2e12, 1.0]))
        assert state.blown_up_ids().tolist() == [1]

    def test_resilience_config_modes(self):
        assert math.isinf(fs.ResilienceConfig("fl").alpha)
        assert fs.ResilienceConfig("rfl", 2.0).alpha == 2.0
        with pytest.raises(ParameterError):
            fs.ResilienceConfig("rfl", math.inf)
        with pytest.raises(ParameterError):
            fs.ResilienceConfig("soft")
