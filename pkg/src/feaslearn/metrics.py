"""Tail-risk statistics over per-sample losses, and multiplier analytics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ParameterError


@dataclass
class LossDistribution:
    """Losses sorted ascending, keeping the original sample ids alongside."""

    losses: np.ndarray
    ids: np.ndarray

    @classmethod
    def from_losses(cls, losses, ids=None) -> "LossDistribution":
        losses = np.asarray(losses, dtype=np.float64)
        ids = np.arange(len(losses)) if ids is None else np.asarray(ids, dtype=np.int64)
        order = np.argsort(losses, kind="stable")
        return cls(losses=losses[order], ids=ids[order])


def empirical_cdf(losses) -> list[tuple[float, float]]:
    """Step points (value, fraction of samples <= value), right-continuous."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise ParameterError("empirical_cdf needs a non-empty loss vector")
    values, counts = np.unique(losses, return_counts=True)
    fractions = np.cumsum(counts) / losses.size
    return list(zip(values.tolist(), fractions.tolist()))


def empirical_quantile(losses, q: float) -> float:
    """The ceil(q * n)-th order statistic, 1-indexed (at least the minimum)."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise ParameterError("quantile of an empty loss vector")
    if not 0.0 <= q < 1.0:
        raise ParameterError("q must lie in [0, 1)")
    idx = max(int(np.ceil(q * losses.size)), 1)
    return float(np.sort(losses)[idx - 1])


def cvar(losses, q: float) -> float:
    """Mean loss over samples strictly above the q-th empirical quantile.

    Falls back to the maximum loss when ties at the top leave the strict
    tail empty (e.g. a constant loss vector).
    """
    losses = np.asarray(losses, dtype=np.float64)
    threshold = empirical_quantile(losses, q)
    tail = losses[losses > threshold]
    if tail.size == 0:
        return float(losses.max())
    return float(tail.mean())


def summary(losses, correct=None) -> dict:
    """Mean and max loss, plus accuracy when a correctness mask is given.

    The max column doubles as the worst-case (max per-sample loss) objective
    value at the current parameters.
    """
    losses = np.asarray(losses, dtype=np.float64)
    out = {"mean": float(losses.mean()), "max": float(losses.max())}
    if correct is not None:
        out["accuracy"] = float(np.mean(np.asarray(correct, dtype=bool)))
    return out


def multiplier_stats(lam, k: int, tol: float = 1e-12) -> dict:
    """Fraction of (near-)zero multipliers, ids of the k largest, and deciles."""
    lam = np.asarray(lam, dtype=np.float64)
    if k > lam.size:
        raise ParameterError("k cannot exceed the number of multipliers")
    order = np.argsort(lam, kind="stable")
    top = order[::-1][:k]
    return {
        "fraction_zero": float(np.mean(lam <= tol)),
        "top_k_ids": [int(i) for i in top],
        "percentiles": {f"p{p}": float(np.percentile(lam, p)) for p in range(0, 101, 10)},
    }


def margin_multiplier_correlation(lam, margins) -> tuple[float, bool]:
    """Spearman rank correlation between multipliers and negated margins.

    Large multipliers on small-margin samples give a positive correlation.
    Returns (correlation, degenerate); degenerate inputs (either vector
    constant) report 0.0 with the flag set.
    """
    lam = np.asarray(lam, dtype=np.float64)
    margins = np.asarray(margins, dtype=np.float64)
    if lam.shape != margins.shape:
        raise ParameterError("multipliers and margins must have equal length")
    if np.all(lam == lam[0]) or np.all(margins == margins[0]):
        return 0.0, True
    rho = stats.spearmanr(lam, -margins).statistic
    if not np.isfinite(rho):
        return 0.0, True
    return float(rho), False
