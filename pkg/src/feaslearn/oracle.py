"""Independent verification machinery.

These routines validate the analytic building blocks without reusing the
code paths they check: gradients against central finite differences, the
closed-form dual maximizer against direct evaluation of both objective
forms, slack elimination against explicit perturbations of the slack-form
value, and feasibility claims against exhaustive grid search. The test
suite trusts the trainer only after these pass.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import feasibility as fs
from . import models
from .data import Batch, CLASSIFICATION, REGRESSION, Dataset, poly_features
from .errors import NumericError, ParameterError

DEFAULT_FAMILIES = ("linear", "poly", "mlp_regressor", "mlp_classifier")


def finite_diff_grad(f, theta, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function, coordinate by coordinate.

    h = 1e-6 roughly balances truncation against rounding for 64-bit values
    of order one.
    """
    if h <= 0:
        raise ParameterError("h must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        bumped = theta.copy()
        bumped[j] = theta[j] + h
        f_plus = f(bumped)
        bumped[j] = theta[j] - h
        f_minus = f(bumped)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"objective non-finite near coordinate {j}")
        grad[j] = (f_plus - f_minus) / (2.0 * h)
    return grad


def random_problem(family: str, rng: np.random.Generator):
    """Draw a small random (model, theta, batch, loss kind) instance of a family."""
    n = int(rng.integers(3, 12))
    if family == "linear":
        d = int(rng.integers(1, 6))
        model = models.LinearModel(d)
        theta = rng.normal(size=model.n_params)
        X = rng.normal(size=(n, d))
        y = rng.normal(size=n)
        return model, theta, Batch(np.arange(n), X, y), models.SQUARED_ERROR
    if family == "poly":
        degree = int(rng.integers(1, 7))
        model = models.PolyModel(degree, "chebyshev", (0.0, 1.0))
        theta = rng.normal(size=model.n_params)
        X = rng.uniform(0.0, 1.0, size=(n, 1))
        y = rng.normal(size=n)
        return model, theta, Batch(np.arange(n), X, y), models.SQUARED_ERROR
    if family == "mlp_regressor":
        d, hdim = int(rng.integers(1, 4)), int(rng.integers(2, 8))
        model = models.MLP((d, hdim, 1), task=REGRESSION)
        theta = model.init_params(int(rng.integers(0, 2**31))) + 0.1 * rng.normal(size=model.n_params)
        X = rng.normal(size=(n, d))
        y = rng.normal(size=n)
        return model, theta, Batch(np.arange(n), X, y), models.SQUARED_ERROR
    if family == "mlp_classifier":
        d, hdim, c = int(rng.integers(1, 4)), int(rng.integers(2, 8)), int(rng.integers(2, 5))
        model = models.MLP((d, hdim, c), task=CLASSIFICATION)
        theta = model.init_params(int(rng.integers(0, 2**31))) + 0.1 * rng.normal(size=model.n_params)
        X = rng.normal(size=(n, d))
        y = rng.integers(0, c, size=n)
        return model, theta, Batch(np.arange(n), X, y), models.CROSS_ENTROPY
    raise ParameterError(f"unknown model family {family!r}")


def check_cserm_identity(model_family: str = "all", n_trials: int = 1000,
                         tol: float = 1e-10, seed: int = 0) -> dict:
    """Verify that the regularized dual value at its analytic maximizer equals
    the clamped-and-squared objective, on random (theta, data, eps, alpha).

    Both sides are evaluated by independent formulas: lam = alpha [g - eps]_+
    plugged into lam^T (g - eps) - ||lam||^2 / (2 alpha) on one side, the
    direct penalty (alpha/2) ||[g - eps]_+||^2 on the other.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    families = DEFAULT_FAMILIES if model_family == "all" else (model_family,)
    rng = np.random.default_rng(seed)
    max_disc = 0.0
    failures = []
    for trial in range(n_trials):
        family = families[trial % len(families)]
        model, theta, batch, kind = random_problem(family, rng)
        g = models.per_sample_loss(kind, model.forward(theta, batch.features), batch.targets)
        if rng.random() < 0.5:
            eps = float(rng.uniform(0.0, 1.5))
        else:
            eps = rng.uniform(0.0, 1.5, size=g.shape)
        alpha = float(10.0 ** rng.uniform(-2, 2))
        lam_star = fs.analytic_dual_opt(g, eps, alpha)
        lhs = fs.lagrangian_alpha(g, eps, lam_star, alpha)
        rhs = fs.cserm_objective(g, eps, alpha)
        disc = abs(lhs - rhs)
        max_disc = max(max_disc, disc)
        if disc > tol:
            failures.append({"trial": trial, "family": family, "alpha": alpha,
                             "discrepancy": disc})
    return {"check": "cserm_identity", "passed": not failures, "n_trials": n_trials,
            "tol": tol, "max_discrepancy": max_disc, "failures": failures}


def check_slack_inner_min(g, eps, alpha: float, n_perturbations: int = 100,
                          tol: float = 1e-10, seed: int = 0, lam=None) -> dict:
    """Verify slack elimination on one (g, eps, alpha) instance.

    (a) For each multiplier vector (given, or random non-negative draws plus
        the analytic maximizer), u = lam/alpha must minimize the slack-form
        value: no perturbed u' >= 0 (coordinate grids around u plus joint
        random moves) may undercut it by more than tol.
    (b) The minimized value must equal the regularized dual value
        identically in lam, and at the analytic maximizer both orderings of
        the saddle agree with the clamped-and-squared objective.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    g = np.asarray(g, dtype=np.float64)
    rng = np.random.default_rng(seed)
    lam_star = fs.analytic_dual_opt(g, eps, alpha)
    if lam is not None:
        lam_draws = [np.asarray(lam, dtype=np.float64)]
    else:
        lam_draws = [rng.uniform(0.0, 2.0, size=g.shape) for _ in range(5)]
    lam_draws.append(lam_star)

    worst_gap = -math.inf
    worst_identity = 0.0
    for lam_vec in lam_draws:
        u_opt = fs.slack_view(lam_vec, alpha).u
        base = fs.lagrangian_rfl_slack(g, eps, u_opt, lam_vec, alpha)
        worst_identity = max(worst_identity, abs(base - fs.lagrangian_alpha(g, eps, lam_vec, alpha)))
        # Coordinate grids: the slack-form value is separable in u, so
        # sweeping one coordinate at a time probes the full minimum.
        grid = np.linspace(0.0, max(1.0, float(u_opt.max()) * 2.0), 21)
        for j in range(g.size):
            u_try = np.repeat(u_opt[None, :], grid.size, axis=0)
            u_try[:, j] = grid
            for row in u_try:
                worst_gap = max(worst_gap, base - fs.lagrangian_rfl_slack(g, eps, row, lam_vec, alpha))
        for _ in range(n_perturbations):
            u_try = np.maximum(u_opt + rng.normal(scale=0.5, size=g.shape), 0.0)
            worst_gap = max(worst_gap, base - fs.lagrangian_rfl_slack(g, eps, u_try, lam_vec, alpha))

    saddle_gap = abs(fs.lagrangian_alpha(g, eps, lam_star, alpha) - fs.cserm_objective(g, eps, alpha))
    passed = worst_gap <= tol and worst_identity <= tol and saddle_gap <= tol
    return {"check": "slack_inner_min", "passed": passed, "tol": tol,
            "worst_inner_gap": worst_gap, "worst_identity_discrepancy": worst_identity,
            "saddle_discrepancy": saddle_gap}


def slack_elimination_suite(n_trials: int = 100, n_perturbations: int = 100,
                            tol: float = 1e-10, seed: int = 0) -> dict:
    """Run :func:`check_slack_inner_min` on random instances."""
    rng = np.random.default_rng(seed)
    reports = []
    for trial in range(n_trials):
        n = int(rng.integers(1, 10))
        g = rng.uniform(0.0, 3.0, size=n)
        eps = rng.uniform(0.0, 1.5, size=n) if rng.random() < 0.5 else float(rng.uniform(0.0, 1.5))
        alpha = float(10.0 ** rng.uniform(-2, 2))
        reports.append(check_slack_inner_min(g, eps, alpha, n_perturbations=n_perturbations,
                                             tol=tol, seed=int(rng.integers(0, 2**31))))
    failures = [r for r in reports if not r["passed"]]
    return {"check": "slack_elimination_suite", "passed": not failures, "n_trials": n_trials,
            "tol": tol,
            "worst_inner_gap": max(r["worst_inner_gap"] for r in reports),
            "worst_identity_discrepancy": max(r["worst_identity_discrepancy"] for r in reports),
            "worst_saddle_discrepancy": max(r["saddle_discrepancy"] for r in reports),
            "n_failures": len(failures)}


def gradient_check_report(families=DEFAULT_FAMILIES, n_draws: int = 20,
                          tol: float = 1e-5, h: float = 1e-6, seed: int = 0) -> dict:
    """Compare analytic gradients against central finite differences.

    Two gradients per draw: the weighted per-sample loss gradient with random
    non-negative weights, and the clamped-and-squared penalty gradient taken
    through its envelope weights alpha [g - eps]_+. Reports the worst
    relative error and the offending coordinate.
    """
    rng = np.random.default_rng(seed)
    out = {"check": "gradients", "tol": tol, "families": {}, "passed": True}
    for family in families:
        worst = {"rel_error": 0.0}
        for draw in range(n_draws):
            model, theta, batch, kind = random_problem(family, rng)
            weights = rng.uniform(0.1, 2.0, size=len(batch))
            eps = float(rng.uniform(0.0, 1.0))
            alpha = float(10.0 ** rng.uniform(-1, 1))

            def weighted_value(th):
                g = models.per_sample_loss(kind, model.forward(th, batch.features), batch.targets)
                return float(weights @ g)

            def penalty_value(th):
                g = models.per_sample_loss(kind, model.forward(th, batch.features), batch.targets)
                return fs.cserm_objective(g, eps, alpha)

            g0 = models.per_sample_loss(kind, model.forward(theta, batch.features), batch.targets)
            checks = [
                ("weighted", weights, weighted_value),
                ("envelope", fs.cserm_weights(g0, eps, alpha), penalty_value),
            ]
            for name, w, value_fn in checks:
                analytic = models.weighted_loss_grad(model, theta, batch, w, kind)
                numeric = finite_diff_grad(value_fn, theta, h=h)
                scale = max(float(np.linalg.norm(numeric)), 1e-8)
                rel = float(np.linalg.norm(analytic - numeric)) / scale
                if rel > worst["rel_error"]:
                    coord = int(np.argmax(np.abs(analytic - numeric)))
                    worst = {"rel_error": rel, "draw": draw, "gradient": name,
                             "coordinate": coord,
                             "analytic": float(analytic[coord]),
                             "numeric": float(numeric[coord])}
        out["families"][family] = worst
        if worst["rel_error"] > tol:
            out["passed"] = False
    return out


def _grid_axes(n_params: int, grid) -> list[np.ndarray]:
    if isinstance(grid, (list, tuple)) and grid and isinstance(grid[0], (list, tuple)):
        specs = list(grid)
    else:
        specs = [grid] * n_params
    if len(specs) != n_params:
        raise ParameterError("need one grid spec per parameter")
    return [np.linspace(float(lo), float(hi), int(num)) for lo, hi, num in specs]


def brute_force_feasible(dataset: Dataset, spec, model: models.Model,
                         grid=(-5.0, 5.0, 201), tol: float = 1e-6) -> dict:
    """Exhaustive grid search for parameters meeting every constraint.

    Only for models with one or two parameters. Returns a witness when some
    grid point has max violation <= tol; otherwise the grid minimum of the
    max violation stands as an infeasibility certificate (valid up to grid
    resolution and the smoothness of the losses).
    """
    if model.n_params > 2:
        raise ParameterError("brute force search supports at most 2 parameters")
    kind = models.SQUARED_ERROR if dataset.task == REGRESSION else models.CROSS_ENTROPY
    axes = _grid_axes(model.n_params, grid)
    best_theta, best_maxviol = None, math.inf
    for point in itertools.product(*axes):
        theta = np.array(point, dtype=np.float64)
        g = models.per_sample_loss(kind, model.forward(theta, dataset.features), dataset.targets)
        maxviol = float(np.maximum(fs.violations(g, spec), 0.0).max())
        if maxviol < best_maxviol:
            best_theta, best_maxviol = theta, maxviol
    feasible = best_maxviol <= tol
    return {
        "feasible": feasible,
        "witness": best_theta.tolist() if feasible else None,
        "min_max_violation": best_maxviol,
        "argmin_theta": best_theta.tolist(),
        "tol": tol,
    }
