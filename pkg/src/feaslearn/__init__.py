"""Per-sample loss-constrained training via primal-dual updates.

The package trains small differentiable models subject to a loss bound on
every individual training sample, either as a hard feasibility problem or
relaxed through minimal-norm slacks, and ships the verification oracles and
experiment CLI used to exercise both.
"""

from .data import (
    Batch,
    Dataset,
    batch_iter,
    gen_conflicting_pairs,
    gen_noisy_cosine,
    gen_two_moons,
    poly_features,
    split_train_test,
)
from .feasibility import (
    ConstraintSpec,
    MultiplierState,
    ResilienceConfig,
    SlackView,
    analytic_dual_opt,
    cserm_objective,
    cserm_weights,
    dual_step_fl,
    dual_step_rfl,
    lagrangian_alpha,
    lagrangian_fl,
    lagrangian_rfl_slack,
    slack_view,
    violations,
)
from .models import (
    MLP,
    LinearModel,
    ModelParams,
    PolyModel,
    per_sample_loss,
    weighted_loss_grad,
)
from .trainers import RunRecord, TrainerConfig, feasibility_report, train

__all__ = [
    "Batch", "Dataset", "batch_iter", "gen_conflicting_pairs", "gen_noisy_cosine",
    "gen_two_moons", "poly_features", "split_train_test",
    "ConstraintSpec", "MultiplierState", "ResilienceConfig", "SlackView",
    "analytic_dual_opt", "cserm_objective", "cserm_weights", "dual_step_fl",
    "dual_step_rfl", "lagrangian_alpha", "lagrangian_fl", "lagrangian_rfl_slack",
    "slack_view", "violations",
    "MLP", "LinearModel", "ModelParams", "PolyModel", "per_sample_loss",
    "weighted_loss_grad",
    "RunRecord", "TrainerConfig", "feasibility_report", "train",
]

__version__ = "0.1.0"
