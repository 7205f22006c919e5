"""Training loops for average-loss, feasibility, resilient, and penalty methods.

One step on a mini-batch always costs one model forward and one backward
pass, whatever the method; the methods differ only in the per-sample weights
applied to the loss gradients:

  erm    uniform 1/|B|
  fl     multipliers after a projected ascent update (dual step first)
  rfl    multipliers after an ascent-with-decay update (dual step first)
  cserm  alpha * [g - eps]_+ computed directly from the batch losses

Multipliers of samples absent from a batch are untouched by that step. The
dual update always precedes the primal one within a step, so the very first
primal update already sees warmed-up multipliers.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from types import SimpleNamespace

import numpy as np

from . import feasibility as fs
from . import models
from .data import CLASSIFICATION, Dataset, batch_iter, combine_seed
from .errors import NumericError, ParameterError
from .metrics import multiplier_stats

ERM = "erm"
FL = "fl"
RFL = "rfl"
CSERM = "cserm"
METHODS = (ERM, FL, RFL, CSERM)

SGD = "sgd"
SGD_MOMENTUM = "sgd_momentum"
ADAMW = "adamw"
# Descriptive alias accepted in configs for the decoupled-decay adaptive
# optimizer.
_OPTIMIZER_ALIASES = {"adaptive_moments_decoupled_decay": ADAMW}
ADAMW_DEFAULTS = {"beta1": 0.9, "beta2": 0.999, "stabilizer": 1e-8}

TRAJECTORY_COLUMNS = [
    "epoch", "train_mean_loss", "train_max_loss", "train_accuracy",
    "sat_fraction", "max_step_violation",
    "lam_min", "lam_mean", "lam_max", "lam_frac_zero",
    "test_mean_loss", "test_max_loss", "test_accuracy",
]


@dataclass
class TrainerConfig:
    method: str
    eta_theta: float = 1e-3
    eta_lambda: float = 1e-2
    alpha: float = math.inf
    eps: float | list | np.ndarray = 0.0
    batch_size: int | None = None
    epochs: int = 100
    seed: int = 0
    primal_optimizer: str = SGD
    momentum: float = 0.9
    weight_decay: float = 0.0
    cosine_decay: bool = False
    analytic_dual: bool = False
    sat_tol: float = 1e-8
    blowup_threshold: float = fs.BLOWUP_THRESHOLD

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}")
        self.primal_optimizer = _OPTIMIZER_ALIASES.get(self.primal_optimizer, self.primal_optimizer)
        if self.primal_optimizer not in (SGD, SGD_MOMENTUM, ADAMW):
            raise ParameterError(f"unknown primal optimizer {self.primal_optimizer!r}")
        if not self.eta_theta > 0:
            raise ParameterError("eta_theta must be positive")
        if self.method in (FL, RFL) and not self.eta_lambda > 0:
            raise ParameterError("eta_lambda must be positive for fl/rfl")
        if self.method == FL:
            self.alpha = math.inf
        if self.method in (RFL, CSERM) and not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError("rfl/cserm need a finite positive alpha")
        if self.analytic_dual and self.method != RFL:
            raise ParameterError("analytic_dual only applies to rfl")
        if self.epochs < 0 or self.seed < 0:
            raise ParameterError("epochs and seed must be non-negative")

    def echo(self) -> dict:
        out = asdict(self)
        if isinstance(out["eps"], np.ndarray):
            out["eps"] = out["eps"].tolist()
        out["alpha"] = "inf" if math.isinf(out["alpha"]) else out["alpha"]
        return out


@dataclass
class RunRecord:
    config: dict
    trajectory: list[dict]
    final_train_losses: np.ndarray | None
    final_test_losses: np.ndarray | None
    multipliers: fs.MultiplierState
    params: models.ModelParams
    status: str
    abort_reason: str | None
    wall_clock_s: float
    train_pass_counts: dict
    metadata: dict = field(default_factory=dict)

    @property
    def aborted(self) -> bool:
        return self.status != "completed"


class _Sgd:
    def __init__(self, weight_decay: float = 0.0):
        self.weight_decay = weight_decay

    def step(self, theta, grad, lr):
        return theta - lr * (grad + self.weight_decay * theta)


class _SgdMomentum:
    def __init__(self, momentum: float = 0.9, weight_decay: float = 0.0):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buf = None

    def step(self, theta, grad, lr):
        update = grad + self.weight_decay * theta
        self.buf = update if self.buf is None else self.momentum * self.buf + update
        return theta - lr * self.buf


class _AdamW:
    """Per-coordinate second-moment scaling with decoupled weight decay."""

    def __init__(self, weight_decay: float = 0.0, beta1: float = ADAMW_DEFAULTS["beta1"],
                 beta2: float = ADAMW_DEFAULTS["beta2"],
                 stabilizer: float = ADAMW_DEFAULTS["stabilizer"]):
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.stabilizer = beta1, beta2, stabilizer
        self.m = None
        self.v = None
        self.t = 0

    def step(self, theta, grad, lr):
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        theta = theta * (1.0 - lr * self.weight_decay)
        return theta - lr * m_hat / (np.sqrt(v_hat) + self.stabilizer)


def _make_optimizer(config: TrainerConfig):
    if config.primal_optimizer == SGD:
        return _Sgd(config.weight_decay)
    if config.primal_optimizer == SGD_MOMENTUM:
        return _SgdMomentum(config.momentum, config.weight_decay)
    return _AdamW(config.weight_decay)


def _loss_kind(dataset: Dataset) -> str:
    return models.CROSS_ENTROPY if dataset.task == CLASSIFICATION else models.SQUARED_ERROR


def _eval_split(model, theta, dataset, kind):
    preds = model.forward(theta, dataset.features)
    losses = models.per_sample_loss(kind, preds, dataset.targets)
    if dataset.task == CLASSIFICATION:
        accuracy = float(np.mean(preds.argmax(axis=1) == dataset.targets))
    else:
        accuracy = math.nan
    return losses, accuracy


def train(config: TrainerConfig, model: models.Model, train_ds: Dataset,
          test_ds: Dataset | None = None, theta0: np.ndarray | None = None) -> RunRecord:
    """Run the full epoch budget of the configured method.

    Within every step the batch losses are computed once, the multipliers of
    exactly the batch samples are updated (fl/rfl), and the primal step uses
    the freshly updated values. Deterministic for fixed config and seed.
    Runs abort (status "aborted", reason recorded) on non-finite losses or
    parameters, or when any multiplier exceeds the blow-up threshold.
    """
    if test_ds is not None and test_ds.task != train_ds.task:
        raise ParameterError("train and test datasets must share a task")
    kind = _loss_kind(train_ds)
    n = train_ds.n_samples
    try:
        eps_vec = np.broadcast_to(np.asarray(config.eps, dtype=np.float64), (n,)).copy()
    except ValueError:
        raise ParameterError(f"eps must be a scalar or a length-{n} vector")
    spec = fs.ConstraintSpec(eps_vec)
    theta = np.array(theta0, dtype=np.float64) if theta0 is not None else model.init_params(config.seed)
    mult = fs.MultiplierState.zeros(n)
    optimizer = _make_optimizer(config)
    batch_size = config.batch_size if config.batch_size is not None else n
    steps_per_epoch = math.ceil(n / batch_size)
    total_steps = max(config.epochs * steps_per_epoch, 1)

    trajectory: list[dict] = []
    status, abort_reason = "completed", None
    passes = {"forward": 0, "backward": 0}
    step_idx = 0
    start = time.perf_counter()

    for epoch in range(config.epochs):
        max_step_violation = -math.inf
        counts_before = models.pass_counts()
        try:
            for batch in batch_iter(train_ds, batch_size, combine_seed(config.seed, epoch)):
                preds, cache = model.forward_cache(theta, batch.features)
                g = models.per_sample_loss(kind, preds, batch.targets)
                eps_b = spec.slice(batch.ids)
                v = fs.violations(g, eps_b)
                max_step_violation = max(max_step_violation, float(v.max()))

                if config.method in (FL, RFL):
                    if config.analytic_dual:
                        lam_new = fs.analytic_dual_opt(g, eps_b, config.alpha)
                    else:
                        lam_new = fs.dual_step_rfl(mult.lam[batch.ids], v,
                                                   config.eta_lambda, config.alpha)
                    mult.lam[batch.ids] = lam_new
                    mult.last_update[batch.ids] = epoch
                    if lam_new.max() > config.blowup_threshold:
                        blown = batch.ids[lam_new > config.blowup_threshold]
                        raise NumericError(
                            f"dual blow-up: multipliers exceed {config.blowup_threshold:g} "
                            f"on samples {blown.tolist()}", ids=blown)
                    weights = lam_new
                elif config.method == CSERM:
                    weights = fs.cserm_weights(g, eps_b, config.alpha)
                else:
                    weights = np.full(len(batch), 1.0 / len(batch))

                dpred = models.loss_grad(kind, preds, batch.targets)
                scaled = weights * dpred if dpred.ndim == 1 else weights[:, None] * dpred
                grad = model.backward(cache, scaled)
                lr = config.eta_theta
                if config.cosine_decay:
                    lr *= 0.5 * (1.0 + math.cos(math.pi * step_idx / total_steps))
                theta = optimizer.step(theta, grad, lr)
                step_idx += 1
                if not np.all(np.isfinite(theta)):
                    raise NumericError("parameters became non-finite after primal step")
        except NumericError as err:
            status, abort_reason = "aborted", str(err)
        counts_after = models.pass_counts()
        passes["forward"] += counts_after["forward"] - counts_before["forward"]
        passes["backward"] += counts_after["backward"] - counts_before["backward"]
        if status != "completed":
            break

        try:
            train_losses, train_acc = _eval_split(model, theta, train_ds, kind)
            test_eval = _eval_split(model, theta, test_ds, kind) if test_ds is not None else None
        except NumericError as err:
            status, abort_reason = "aborted", f"epoch-end evaluation failed: {err}"
            break
        row = {
            "epoch": epoch,
            "train_mean_loss": float(train_losses.mean()),
            "train_max_loss": float(train_losses.max()),
            "train_accuracy": train_acc,
            "sat_fraction": float(np.mean(train_losses <= spec.values + config.sat_tol)),
            "max_step_violation": max_step_violation,
            "lam_min": float(mult.lam.min()),
            "lam_mean": float(mult.lam.mean()),
            "lam_max": float(mult.lam.max()),
            "lam_frac_zero": float(np.mean(mult.lam <= 1e-12)),
            "test_mean_loss": math.nan,
            "test_max_loss": math.nan,
            "test_accuracy": math.nan,
        }
        if test_eval is not None:
            test_losses, test_acc = test_eval
            row["test_mean_loss"] = float(test_losses.mean())
            row["test_max_loss"] = float(test_losses.max())
            row["test_accuracy"] = test_acc
        trajectory.append(row)

    final_train = final_test = None
    try:
        final_train, _ = _eval_split(model, theta, train_ds, kind)
        if test_ds is not None:
            final_test, _ = _eval_split(model, theta, test_ds, kind)
    except NumericError:
        pass  # aborted runs keep whatever is computable

    wall = time.perf_counter() - start
    config_echo = config.echo()
    config_echo["dataset_signature"] = {
        "train": train_ds.signature(),
        "test": test_ds.signature() if test_ds is not None else None,
    }
    return RunRecord(
        config=config_echo,
        trajectory=trajectory,
        final_train_losses=final_train,
        final_test_losses=final_test,
        multipliers=mult,
        params=models.ModelParams(theta=theta, descriptor=model.descriptor()),
        status=status,
        abort_reason=abort_reason,
        wall_clock_s=wall,
        train_pass_counts=passes,
        metadata={
            "loss_kind": kind,
            "model": model.descriptor(),
            "activation": "relu" if isinstance(model, models.MLP) else "none",
            "init": "uniform_fan_in" if isinstance(model, models.MLP) else "zeros",
            "adamw_defaults": ADAMW_DEFAULTS,
            "steps_per_epoch": steps_per_epoch,
        },
    )


def feasibility_report(model: models.Model, theta, dataset: Dataset, spec,
                       tol: float = 1e-8) -> dict:
    """Count satisfied constraints and name the violated ones at the current theta."""
    kind = _loss_kind(dataset)
    losses = models.per_sample_loss(kind, model.forward(theta, dataset.features), dataset.targets)
    v = fs.violations(losses, spec)
    violating = dataset.ids[v > tol]
    return {
        "satisfied_count": int(np.sum(v <= tol)),
        "max_violation": float(np.maximum(v, 0.0).max()),
        "violating_ids": [int(i) for i in violating],
    }


def _fmt(value) -> str:
    return repr(float(value))


def save_run(record: RunRecord, outdir) -> None:
    """Persist a run directory; see the README for the file contract."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config.json"), "w") as fh:
        json.dump(record.config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(outdir, "trajectory.csv"), "w") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for row in record.trajectory:
            fh.write(",".join(str(int(row[c])) if c == "epoch" else _fmt(row[c])
                              for c in TRAJECTORY_COLUMNS) + "\n")
    for split, losses in (("train", record.final_train_losses), ("test", record.final_test_losses)):
        path = os.path.join(outdir, f"final_losses_{split}.csv")
        with open(path, "w") as fh:
            fh.write("id,loss\n")
            if losses is not None:
                for i, value in enumerate(losses):
                    fh.write(f"{i},{_fmt(value)}\n")
    with open(os.path.join(outdir, "multipliers.csv"), "w") as fh:
        fh.write("id,lambda\n")
        for i, value in enumerate(record.multipliers.lam):
            fh.write(f"{i},{_fmt(value)}\n")
    models.save_checkpoint(os.path.join(outdir, "checkpoint.bin"), record.params)
    with open(os.path.join(outdir, "status.txt"), "w") as fh:
        fh.write("completed\n" if record.status == "completed"
                 else f"aborted: {record.abort_reason}\n")
    with open(os.path.join(outdir, "meta.json"), "w") as fh:
        json.dump({
            "status": record.status,
            "abort_reason": record.abort_reason,
            "wall_clock_s": record.wall_clock_s,
            "train_pass_counts": record.train_pass_counts,
            "metadata": record.metadata,
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_loss_csv(path) -> np.ndarray | None:
    with open(path) as fh:
        rows = fh.read().strip().splitlines()[1:]
    if not rows:
        return None
    return np.array([float(r.split(",")[1]) for r in rows])


def load_run(outdir) -> SimpleNamespace:
    """Reload persisted artifacts; enough for comparison reports, no retraining."""
    with open(os.path.join(outdir, "config.json")) as fh:
        config = json.load(fh)
    with open(os.path.join(outdir, "meta.json")) as fh:
        meta = json.load(fh)
    with open(os.path.join(outdir, "trajectory.csv")) as fh:
        lines = fh.read().strip().splitlines()
    trajectory = {c: [] for c in TRAJECTORY_COLUMNS}
    for line in lines[1:]:
        for c, raw in zip(TRAJECTORY_COLUMNS, line.split(",")):
            trajectory[c].append(float(raw))
    trajectory = {c: np.array(v) for c, v in trajectory.items()}
    lam = _read_loss_csv(os.path.join(outdir, "multipliers.csv"))
    return SimpleNamespace(
        config=config,
        meta=meta,
        trajectory=trajectory,
        train_losses=_read_loss_csv(os.path.join(outdir, "final_losses_train.csv")),
        test_losses=_read_loss_csv(os.path.join(outdir, "final_losses_test.csv")),
        multipliers=lam if lam is not None else np.zeros(0),
        params=models.load_checkpoint(os.path.join(outdir, "checkpoint.bin")),
        status=meta["status"],
    )
