"""Constraint bookkeeping, Lagrangian values, and dual update rules.

The core objects are the per-sample bounds (eps), the non-negative
multiplier vector (lam), and the resilience coefficient alpha. Plain
feasibility training corresponds to alpha = inf: the multiplier decay
term vanishes and one code path serves both update rules.

Slack variables are never stored: the inner minimization over slacks has
the closed-form solution u = lam / alpha, so slacks are always derived on
demand from the multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ParameterError, ShapeError

FL = "fl"
RFL = "rfl"

# Multipliers past this are treated as dual blow-up (unsatisfiable
# constraints under pure ascent); trainers abort with the offending ids.
BLOWUP_THRESHOLD = 1e12


def _as_eps(spec) -> np.ndarray | float:
    if isinstance(spec, ConstraintSpec):
        return spec.values
    return np.asarray(spec, dtype=np.float64) if np.ndim(spec) else float(spec)


@dataclass
class ConstraintSpec:
    """Per-sample loss bounds. Scalars broadcast to a full vector at load time."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if (self.values < 0).any():
            raise ParameterError("constraint levels must be non-negative")

    @classmethod
    def uniform(cls, level: float, n: int) -> "ConstraintSpec":
        if level < 0:
            raise ParameterError("constraint level must be non-negative")
        return cls(values=np.full(n, float(level)))

    def slice(self, ids) -> np.ndarray:
        return self.values[np.asarray(ids, dtype=np.int64)]


@dataclass
class MultiplierState:
    """One non-negative multiplier per training sample, zero-initialized."""

    lam: np.ndarray
    last_update: np.ndarray = field(default=None)

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=np.float64)
        if (self.lam < 0).any():
            raise ParameterError("multipliers must be non-negative")
        if self.last_update is None:
            self.last_update = np.full(self.lam.shape, -1, dtype=np.int64)

    @classmethod
    def zeros(cls, n: int) -> "MultiplierState":
        return cls(lam=np.zeros(n))

    def blown_up_ids(self, threshold: float = BLOWUP_THRESHOLD) -> np.ndarray:
        return np.nonzero(~np.isfinite(self.lam) | (self.lam > threshold))[0]


@dataclass
class ResilienceConfig:
    """Mode switch between hard constraints (fl) and slack-relaxed ones (rfl)."""

    mode: str
    alpha: float = math.inf

    def __post_init__(self):
        if self.mode not in (FL, RFL):
            raise ParameterError(f"mode must be '{FL}' or '{RFL}'")
        if self.mode == FL:
            self.alpha = math.inf
        elif not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError("rfl mode needs a finite positive alpha")


@dataclass
class SlackView:
    """Derived slack values lam / alpha; only meaningful in rfl mode."""

    u: np.ndarray


def violations(g, spec) -> np.ndarray:
    """g - eps elementwise; positive entries are unsatisfied constraints."""
    return np.asarray(g, dtype=np.float64) - _as_eps(spec)


def dual_step_fl(lam, v, eta_lam: float) -> np.ndarray:
    """Projected gradient ascent on the multipliers: [lam + eta * v]_+."""
    return dual_step_rfl(lam, v, eta_lam, math.inf)


def dual_step_rfl(lam, v, eta_lam: float, alpha: float) -> np.ndarray:
    """Ascent with multiplier decay 1/alpha: [lam + eta * (v - lam/alpha)]_+.

    The decay discounts historical violations, which keeps multipliers of
    unsatisfiable constraints bounded (fixed point alpha * v for constant
    violation v). alpha = inf recovers the plain ascent step exactly.
    """
    if eta_lam <= 0:
        raise ParameterError("eta_lam must be positive")
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    lam = np.asarray(lam, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.maximum(lam + eta_lam * (v - lam / alpha), 0.0)
    if not np.all(np.isfinite(out)):
        ids = np.nonzero(~np.isfinite(out))[0]
        raise NumericError(f"dual update produced non-finite multipliers at {ids.tolist()}", ids=ids)
    return out


def lagrangian_fl(g, spec, lam) -> float:
    """Inner product of the multipliers with the constraint violations."""
    lam = np.asarray(lam, dtype=np.float64)
    v = violations(g, spec)
    if lam.shape != v.shape:
        raise ShapeError("multiplier and loss vectors must have equal length")
    return float(lam @ v)


def lagrangian_alpha(g, spec, lam, alpha: float) -> float:
    """Quadratically-regularized value: lam^T (g - eps) - ||lam||^2 / (2 alpha).

    Strictly concave in lam for finite alpha, so the inner maximization has
    the unique solution given by :func:`analytic_dual_opt`.
    """
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    lam = np.asarray(lam, dtype=np.float64)
    return lagrangian_fl(g, spec, lam) - float(lam @ lam) / (2.0 * alpha)


def lagrangian_rfl_slack(g, spec, u, lam, alpha: float) -> float:
    """Slack-form value (alpha/2)||u||^2 + lam^T (g - eps - u)."""
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    u = np.asarray(u, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    v = violations(g, spec)
    return 0.5 * alpha * float(u @ u) + float(lam @ (v - u))


def analytic_dual_opt(g, spec, alpha: float) -> np.ndarray:
    """Closed-form maximizer of the regularized value: alpha * [g - eps]_+."""
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    return alpha * np.maximum(violations(g, spec), 0.0)


def slack_view(lam, alpha: float) -> SlackView:
    """Recover the eliminated slack variables u = lam / alpha."""
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ParameterError("slack variables are only defined for finite positive alpha")
    lam = np.asarray(lam, dtype=np.float64)
    if (lam < 0).any():
        raise ParameterError("multipliers must be non-negative")
    return SlackView(u=lam / alpha)


def cserm_objective(g, spec, alpha: float) -> float:
    """Clamped-and-squared penalty (alpha/2) * ||[g - eps]_+||^2.

    Equals :func:`lagrangian_alpha` evaluated at :func:`analytic_dual_opt`;
    minimizing it over model parameters is equivalent to the slack-relaxed
    feasibility problem.
    """
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    clamped = np.maximum(violations(g, spec), 0.0)
    return 0.5 * alpha * float(clamped @ clamped)


def cserm_weights(g, spec, alpha: float) -> np.ndarray:
    """Per-sample weights alpha * [g - eps]_+ whose weighted loss gradient
    equals the gradient of :func:`cserm_objective` (the inner maximizer is
    unique, so the envelope theorem applies)."""
    return analytic_dual_opt(g, spec, alpha)
