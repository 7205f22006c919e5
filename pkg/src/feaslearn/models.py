"""Small differentiable predictors with per-sample losses and exact gradients.

Models are stateless architecture objects; parameters travel as a flat
float64 vector so optimizers and checkpoints never care about layer
structure. All gradients are hand-written. A weighted gradient over a batch
costs exactly one forward and one backward pass, the same as an unweighted
(average-loss) gradient: per-sample gradients are never materialized.

Everything runs in 64-bit floats; the verification oracles demand ~1e-10
agreement between independent formulas, which single precision cannot reach.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import data as _data
from .errors import NumericError, ParameterError, ShapeError

SQUARED_ERROR = "squared_error"
CROSS_ENTROPY = "cross_entropy"

# Global forward/backward counters, used to demonstrate cost parity between
# plain average-loss training and multiplier-weighted training.
_PASS_COUNTS = {"forward": 0, "backward": 0}


def reset_pass_counts() -> None:
    _PASS_COUNTS["forward"] = 0
    _PASS_COUNTS["backward"] = 0


def pass_counts() -> dict:
    return dict(_PASS_COUNTS)


@dataclass
class ModelParams:
    """Flat parameter vector plus the plain-text shape descriptor it belongs to."""

    theta: np.ndarray
    descriptor: str

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        expected = model_from_descriptor(self.descriptor).n_params
        if self.theta.shape != (expected,):
            raise ShapeError(
                f"descriptor {self.descriptor!r} expects {expected} parameters, got {self.theta.shape}"
            )


class Model:
    """Base class: subclasses define forward_cache / backward and init."""

    task: str
    n_params: int

    def descriptor(self) -> str:
        raise NotImplementedError

    def init_params(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def forward_cache(self, theta, features):
        raise NotImplementedError

    def backward(self, cache, grad_pred):
        raise NotImplementedError

    def forward(self, theta, features) -> np.ndarray:
        preds, _ = self.forward_cache(theta, features)
        return preds

    def _check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_params,):
            raise ShapeError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        return theta


class LinearModel(Model):
    """Linear map features -> scalar prediction, no intercept.

    The feature matrix is expected to carry its own constant column when an
    intercept is wanted (polynomial bases always do). Parameters initialize
    to zero, so gradient descent explores small-coefficient solutions first.
    """

    task = _data.REGRESSION

    def __init__(self, n_features: int):
        if n_features < 1:
            raise ParameterError("n_features must be >= 1")
        self.n_features = n_features
        self.n_params = n_features

    def descriptor(self) -> str:
        return f"linear {self.n_features}"

    def init_params(self, seed: int) -> np.ndarray:
        return np.zeros(self.n_params)

    def forward_cache(self, theta, features):
        theta = self._check_theta(theta)
        X = np.asarray(features, dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got {X.shape[1]}")
        _PASS_COUNTS["forward"] += 1
        return X @ theta, X

    def backward(self, cache, grad_pred):
        _PASS_COUNTS["backward"] += 1
        return cache.T @ np.asarray(grad_pred, dtype=np.float64)


class PolyModel(Model):
    """Polynomial regressor: basis expansion of a scalar input, then linear."""

    task = _data.REGRESSION

    def __init__(self, degree: int, basis: str = "chebyshev",
                 domain: tuple[float, float] | None = None):
        if degree < 0:
            raise ParameterError("degree must be >= 0")
        self.degree = degree
        self.basis = basis
        self.domain = tuple(domain) if domain is not None else None
        self.n_params = degree + 1

    def descriptor(self) -> str:
        dom = "none" if self.domain is None else f"{self.domain[0]!r},{self.domain[1]!r}"
        return f"poly {self.degree} {self.basis} {dom}"

    def init_params(self, seed: int) -> np.ndarray:
        return np.zeros(self.n_params)

    def expand(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 2:
            if x.shape[1] != 1:
                raise ShapeError("polynomial models take a single input feature")
            x = x[:, 0]
        return _data.poly_features(x, self.degree, self.basis, self.domain)

    def forward_cache(self, theta, features):
        theta = self._check_theta(theta)
        Phi = self.expand(features)
        _PASS_COUNTS["forward"] += 1
        return Phi @ theta, Phi

    def backward(self, cache, grad_pred):
        _PASS_COUNTS["backward"] += 1
        return cache.T @ np.asarray(grad_pred, dtype=np.float64)


class MLP(Model):
    """Fully-connected ReLU network with a linear output layer.

    ``layers`` gives the width of every layer including input and output,
    e.g. (2, 70, 70, 2) for a two-hidden-layer classifier. Regression MLPs
    use an output width of 1 and return squeezed scalar predictions.
    Weights initialize uniformly at +-1/sqrt(fan_in), biases likewise.
    """

    def __init__(self, layers: tuple[int, ...], task: str = _data.CLASSIFICATION):
        layers = tuple(int(w) for w in layers)
        if len(layers) < 2 or any(w < 1 for w in layers):
            raise ParameterError("layers must list at least input and output widths >= 1")
        if task not in (_data.REGRESSION, _data.CLASSIFICATION):
            raise ParameterError(f"unknown task {task!r}")
        if task == _data.REGRESSION and layers[-1] != 1:
            raise ParameterError("regression MLPs need output width 1")
        self.layers = layers
        self.task = task
        self._shapes = [(layers[i + 1], layers[i]) for i in range(len(layers) - 1)]
        self.n_params = sum(o * i + o for o, i in self._shapes)

    def descriptor(self) -> str:
        return f"mlp {','.join(str(w) for w in self.layers)} {self.task}"

    def init_params(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        parts = []
        for out_w, in_w in self._shapes:
            bound = 1.0 / np.sqrt(in_w)
            parts.append(rng.uniform(-bound, bound, size=out_w * in_w))
            parts.append(rng.uniform(-bound, bound, size=out_w))
        return np.concatenate(parts)

    def _unpack(self, theta):
        weights, biases, offset = [], [], 0
        for out_w, in_w in self._shapes:
            weights.append(theta[offset:offset + out_w * in_w].reshape(out_w, in_w))
            offset += out_w * in_w
            biases.append(theta[offset:offset + out_w])
            offset += out_w
        return weights, biases

    def forward_cache(self, theta, features):
        theta = self._check_theta(theta)
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.layers[0]:
            raise ShapeError(f"expected input width {self.layers[0]}, got shape {X.shape}")
        weights, biases = self._unpack(theta)
        activations = [X]
        pre_acts = []
        a = X
        for i, (W, b) in enumerate(zip(weights, biases)):
            z = a @ W.T + b
            pre_acts.append(z)
            a = np.maximum(z, 0.0) if i < len(weights) - 1 else z
            activations.append(a)
        _PASS_COUNTS["forward"] += 1
        out = activations[-1]
        preds = out[:, 0] if self.task == _data.REGRESSION else out
        return preds, (weights, activations, pre_acts)

    def backward(self, cache, grad_pred):
        weights, activations, pre_acts = cache
        G = np.asarray(grad_pred, dtype=np.float64)
        if G.ndim == 1:
            G = G[:, None]
        grads_w = [None] * len(weights)
        grads_b = [None] * len(weights)
        delta = G
        for i in range(len(weights) - 1, -1, -1):
            grads_w[i] = delta.T @ activations[i]
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ weights[i]) * (pre_acts[i - 1] > 0.0)
        _PASS_COUNTS["backward"] += 1
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(grads_w, grads_b)])


def model_from_descriptor(descriptor: str) -> Model:
    """Rebuild an architecture from its plain-text shape descriptor."""
    parts = descriptor.strip().split()
    if parts and parts[0] == "linear" and len(parts) == 2:
        return LinearModel(int(parts[1]))
    if parts and parts[0] == "poly" and len(parts) == 4:
        domain = None if parts[3] == "none" else tuple(float(v) for v in parts[3].split(","))
        return PolyModel(int(parts[1]), parts[2], domain)
    if parts and parts[0] == "mlp" and len(parts) == 3:
        return MLP(tuple(int(w) for w in parts[1].split(",")), parts[2])
    raise ParameterError(f"unparseable shape descriptor {descriptor!r}")


def per_sample_loss(kind: str, predictions, targets) -> np.ndarray:
    """Non-negative loss per sample.

    squared_error: (pred - y)^2 for scalar predictions.
    cross_entropy: -log softmax(logits)[y], computed from logits via a
    stable log-sum-exp (never from normalized probabilities).
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    bad = ~np.isfinite(predictions)
    if bad.any():
        ids = np.nonzero(bad.any(axis=-1) if predictions.ndim > 1 else bad)[0]
        raise NumericError(f"non-finite predictions for samples {ids.tolist()}", ids=ids)
    if kind == SQUARED_ERROR:
        targets = np.asarray(targets, dtype=np.float64)
        if predictions.shape != targets.shape:
            raise ShapeError(f"prediction shape {predictions.shape} != target shape {targets.shape}")
        with np.errstate(over="ignore"):
            out = (predictions - targets) ** 2
    elif kind == CROSS_ENTROPY:
        targets = np.asarray(targets, dtype=np.int64)
        if predictions.ndim != 2 or targets.shape != (predictions.shape[0],):
            raise ShapeError("cross_entropy expects (n, C) logits and (n,) labels")
        zmax = predictions.max(axis=1, keepdims=True)
        lse = np.log(np.exp(predictions - zmax).sum(axis=1)) + zmax[:, 0]
        out = lse - predictions[np.arange(len(targets)), targets]
    else:
        raise ParameterError(f"unknown loss kind {kind!r}")
    overflow = ~np.isfinite(out)
    if overflow.any():
        ids = np.nonzero(overflow)[0]
        raise NumericError(f"non-finite losses for samples {ids.tolist()}", ids=ids)
    return out


def loss_grad(kind: str, predictions, targets) -> np.ndarray:
    """Gradient of each per-sample loss with respect to its own prediction."""
    predictions = np.asarray(predictions, dtype=np.float64)
    if kind == SQUARED_ERROR:
        return 2.0 * (predictions - np.asarray(targets, dtype=np.float64))
    if kind == CROSS_ENTROPY:
        targets = np.asarray(targets, dtype=np.int64)
        zmax = predictions.max(axis=1, keepdims=True)
        expz = np.exp(predictions - zmax)
        probs = expz / expz.sum(axis=1, keepdims=True)
        probs[np.arange(len(targets)), targets] -= 1.0
        return probs
    raise ParameterError(f"unknown loss kind {kind!r}")


def weighted_loss_grad(model: Model, theta, batch, weights, kind: str) -> np.ndarray:
    """Gradient of sum_i weights_i * loss_i(theta) in one forward/backward pass.

    ``batch`` is any object with .features and .targets. Weights must be
    non-negative; the result is linear in them.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(batch.targets),):
        raise ShapeError("weights must have one entry per batch sample")
    if (weights < 0).any():
        raise ParameterError("weights must be non-negative")
    preds, cache = model.forward_cache(theta, batch.features)
    dpred = loss_grad(kind, preds, batch.targets)
    scaled = weights * dpred if dpred.ndim == 1 else weights[:, None] * dpred
    grad = model.backward(cache, scaled)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite entries in weighted loss gradient")
    return grad


def classification_margins(logits, targets) -> np.ndarray:
    """Signed margin per sample: true-class logit minus the best other logit."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    idx = np.arange(len(targets))
    true_logit = logits[idx, targets]
    masked = logits.copy()
    masked[idx, targets] = -np.inf
    return true_logit - masked.max(axis=1)


def save_checkpoint(path, params: ModelParams) -> None:
    """Raw little-endian float64 parameter dump plus a sidecar shape descriptor."""
    path = str(path)
    params.theta.astype("<f8").tofile(path)
    with open(path + ".shape", "w") as fh:
        fh.write(params.descriptor + "\n")


def load_checkpoint(path) -> ModelParams:
    path = str(path)
    with open(path + ".shape") as fh:
        descriptor = fh.read().strip()
    theta = np.fromfile(path, dtype="<f8")
    return ModelParams(theta=theta, descriptor=descriptor)
