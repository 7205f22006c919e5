"""Oracle self-tests: these run before anything else is trusted."""

import numpy as np
import pytest

from feaslearn import feasibility as fs
from feaslearn import models, oracle
from feaslearn.data import Dataset
from feaslearn.errors import ParameterError
from feaslearn.models import LinearModel
from feaslearn.trainers import TrainerConfig, train


def test_finite_diff_on_quadratic():
    grad = oracle.finite_diff_grad(lambda th: 0.5 * float(th @ th), np.array([1.0, 2.0]), h=1e-5)
    assert np.allclose(grad, [1.0, 2.0], atol=1e-8)


def test_finite_diff_constant_function():
    grad = oracle.finite_diff_grad(lambda th: 3.5, np.array([0.3, -1.2, 4.0]))
    assert np.allclose(grad, 0.0)


def test_finite_diff_rejects_bad_step():
    with pytest.raises(ParameterError):
        oracle.finite_diff_grad(lambda th: 0.0, np.zeros(2), h=0.0)


def test_cserm_identity_hand_instance():
    g = np.array([0.6, 0.3])
    lam_star = fs.analytic_dual_opt(g, 0.51, 2.0)
    lhs = fs.lagrangian_alpha(g, 0.51, lam_star, 2.0)
    rhs = fs.cserm_objective(g, 0.51, 2.0)
    assert lhs == pytest.approx(0.0081, abs=1e-15)
    assert abs(lhs - rhs) < 1e-15


def test_cserm_identity_feasible_case_is_zero():
    g = np.array([0.1, 0.2])
    eps = 0.5  # above max(g): both sides exactly zero
    lam_star = fs.analytic_dual_opt(g, eps, 3.0)
    assert fs.lagrangian_alpha(g, eps, lam_star, 3.0) == 0.0
    assert fs.cserm_objective(g, eps, 3.0) == 0.0


def test_cserm_identity_thousand_trials():
    report = oracle.check_cserm_identity("all", n_trials=1000, tol=1e-10, seed=0)
    assert report["passed"], report
    assert report["max_discrepancy"] <= 1e-10


def test_slack_inner_min_zero_multipliers():
    report = oracle.check_slack_inner_min(np.array([0.4]), 0.2, 2.0, lam=np.array([0.0]))
    assert report["passed"]
    # with lam = 0 the inner minimum sits at u = 0 with value 0
    assert fs.lagrangian_rfl_slack([0.4], 0.2, [0.0], [0.0], 2.0) == 0.0


def test_slack_inner_min_hand_grid():
    # u* = lam/alpha = 0.09; sweep u' over [0, 1] step 0.01
    g, eps, alpha = np.array([0.6]), 0.51, 2.0
    lam = np.array([0.18])
    base = fs.lagrangian_rfl_slack(g, eps, lam / alpha, lam, alpha)
    for u in np.arange(0.0, 1.0 + 1e-12, 0.01):
        assert fs.lagrangian_rfl_slack(g, eps, np.array([u]), lam, alpha) >= base - 1e-12
    assert np.allclose(lam / alpha, [0.09])


def test_slack_minimum_equals_regularized_value_in_lam():
    # the minimized slack form agrees with the regularized dual value for any lam
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        g = rng.uniform(0, 3, n)
        eps = rng.uniform(0, 1, n)
        alpha = float(10.0 ** rng.uniform(-1, 1))
        lam = rng.uniform(0, 2, n)
        inner = fs.lagrangian_rfl_slack(g, eps, lam / alpha, lam, alpha)
        assert abs(inner - fs.lagrangian_alpha(g, eps, lam, alpha)) < 1e-12


def test_slack_elimination_suite_passes():
    report = oracle.slack_elimination_suite(n_trials=100, n_perturbations=100, tol=1e-10, seed=0)
    assert report["passed"], report


def test_gradient_check_all_families():
    report = oracle.gradient_check_report(n_draws=5, tol=1e-5, seed=0)
    assert report["passed"], report
    for fam in oracle.DEFAULT_FAMILIES:
        assert report["families"][fam]["rel_error"] < 1e-5


def _constant_predictor_dataset(base: Dataset) -> Dataset:
    return Dataset(features=np.ones((base.n_samples, 1)), targets=base.targets,
                   ids=base.ids.copy(), task=base.task)


def test_brute_force_infeasible_conflicting_pairs():
    from feaslearn.data import gen_conflicting_pairs
    ds = _constant_predictor_dataset(gen_conflicting_pairs(1, 1, 2.0, 0))
    report = oracle.brute_force_feasible(ds, 0.0, LinearModel(1), grid=(-6.0, 6.0, 601))
    assert not report["feasible"]
    # midpoint is the optimum: max squared error exactly 1; allow grid slack
    assert report["min_max_violation"] >= 1.0 - 0.05
    assert report["witness"] is None


def test_brute_force_feasible_with_loose_bound():
    from feaslearn.data import gen_conflicting_pairs
    pairs = gen_conflicting_pairs(1, 1, 2.0, 0)
    ds = _constant_predictor_dataset(pairs)
    midpoint = pairs.targets.mean()
    # eps = 1 makes the midpoint the unique feasible constant, so the
    # feasibility tolerance must absorb the grid spacing
    report = oracle.brute_force_feasible(ds, 1.0, LinearModel(1), grid=(-6.0, 6.0, 601), tol=0.05)
    assert report["feasible"]
    assert abs(report["witness"][0] - midpoint) < 0.05


def test_brute_force_single_sample_interpolation():
    ds = Dataset(features=np.array([[2.0]]), targets=np.array([3.0]),
                 ids=np.array([0]), task="regression")
    report = oracle.brute_force_feasible(ds, 0.0, LinearModel(1), grid=(-5.0, 5.0, 201))
    assert report["feasible"]
    assert report["witness"][0] == pytest.approx(1.5, abs=1e-12)


def test_brute_force_agrees_with_trainer_on_feasible_problem():
    # exact linear relation: trainer reaches ~zero violation, oracle concurs
    x = np.linspace(0.5, 2.0, 6)
    ds = Dataset(features=x[:, None], targets=2.0 * x, ids=np.arange(6), task="regression")
    model = LinearModel(1)
    cfg = TrainerConfig(method="fl", eta_theta=1e-3, eta_lambda=0.1, eps=0.05,
                        epochs=1000, primal_optimizer="sgd", seed=0)
    record = train(cfg, model, ds)
    trained_viol = max(0.0, record.trajectory[-1]["train_max_loss"] - 0.05)
    assert trained_viol <= 1e-6
    report = oracle.brute_force_feasible(ds, 0.05, model, grid=(-5.0, 5.0, 201), tol=1e-6)
    assert report["feasible"]


def test_brute_force_rejects_large_models():
    ds = Dataset(features=np.ones((2, 3)), targets=np.zeros(2), ids=np.arange(2), task="regression")
    with pytest.raises(ParameterError):
        oracle.brute_force_feasible(ds, 0.0, LinearModel(3))


def test_random_problem_unknown_family():
    with pytest.raises(ParameterError):
        oracle.random_problem("resnet", np.random.default_rng(0))
