"""Conditioned policy network: a small numpy MLP with categorical output.

The network maps (observation, scaled remaining horizon, scaled desired
return) to action probabilities and is trained by cross-entropy against the
actions stored in collected trajectories. Forward, backward, and both
optimizers are implemented directly so gradients can be checked against
finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class PolicyParameters:
    """Weights and biases of an input -> hidden(xL) -> actions network."""

    weights: list  # list of (fan_in, fan_out) arrays
    biases: list   # list of (fan_out,) arrays
    obs_dim: int
    n_objectives: int
    n_actions: int
    hidden_dims: tuple

    @property
    def input_dim(self) -> int:
        return self.obs_dim + 1 + self.n_objectives


@dataclass
class TrainBatch:
    """Labeled conditioning samples drawn from stored trajectories."""

    observations: np.ndarray    # (N, obs_dim)
    horizons: np.ndarray        # (N,) scaled remaining lengths
    desired_returns: np.ndarray  # (N, d) scaled
    actions: np.ndarray         # (N,) int labels

    def __post_init__(self):
        n = len(self.actions)
        if n < 1:
            raise ValueError("batch must contain at least one sample")
        if len(self.observations) != n or len(self.horizons) != n \
                or len(self.desired_returns) != n:
            raise ValueError("batch fields must have equal length")


def init_network(obs_dim: int, n_objectives: int, n_actions: int,
                 hidden_dims, seed: int) -> PolicyParameters:
    """Deterministic uniform initialization in +-sqrt(6 / (fan_in + fan_out))."""
    if obs_dim < 1 or n_objectives < 1 or n_actions < 1:
        raise ValueError("all network dimensions must be >= 1")
    hidden_dims = tuple(int(h) for h in hidden_dims)
    if any(h < 1 for h in hidden_dims):
        raise ValueError("hidden dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    dims = (obs_dim + 1 + n_objectives,) + hidden_dims + (n_actions,)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return PolicyParameters(weights=weights, biases=biases, obs_dim=obs_dim,
                            n_objectives=n_objectives, n_actions=n_actions,
                            hidden_dims=hidden_dims)


def network_inputs(observation, horizon: float, desired_return) -> np.ndarray:
    """Concatenate one conditioning tuple into a network input row."""
    return np.concatenate([np.asarray(observation, dtype=float),
                           [float(horizon)],
                           np.asarray(desired_return, dtype=float)])


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(params: PolicyParameters, x: np.ndarray):
    activations = [x]
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
        activations.append(h)
    logits = h @ params.weights[-1] + params.biases[-1]
    return _softmax(logits), activations


def forward(params: PolicyParameters, observation, horizon: float,
            desired_return) -> np.ndarray:
    """Action probability distribution for one conditioning tuple."""
    x = network_inputs(observation, horizon, desired_return)
    if x.size != params.input_dim:
        raise ValueError(f"input has {x.size} features, network expects {params.input_dim}")
    probs, _ = _forward_batch(params, x.reshape(1, -1))
    return probs[0]


def nll_and_grads(params: PolicyParameters, x: np.ndarray, labels: np.ndarray):
    """Mean negative log-likelihood of the labels and its parameter gradients."""
    n = len(labels)
    probs, activations = _forward_batch(params, x)
    picked = probs[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.biases)
    delta = dlogits
    for layer in range(len(params.weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer].T) * (activations[layer] > 0)
    return loss, grad_w, grad_b


@dataclass
class AdamState:
    """First/second moment accumulators for the adaptive optimizer."""

    m_w: list = field(default_factory=list)
    v_w: list = field(default_factory=list)
    m_b: list = field(default_factory=list)
    v_b: list = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: PolicyParameters) -> "AdamState":
        return cls(m_w=[np.zeros_like(w) for w in params.weights],
                   v_w=[np.zeros_like(w) for w in params.weights],
                   m_b=[np.zeros_like(b) for b in params.biases],
                   v_b=[np.zeros_like(b) for b in params.biases])


def train_batch(params: PolicyParameters, batch: TrainBatch,
                learning_rate: float, adam: AdamState | None = None) -> float:
    """One optimizer step on the batch cross-entropy; returns the pre-step loss.

    Plain gradient descent by default; pass an ``AdamState`` for the adaptive
    variant. Parameters are updated in place.
    """
    if learning_rate <= 0:
        raise ValueError("learning rate must be positive")
    x = np.hstack([batch.observations,
                   batch.horizons.reshape(-1, 1),
                   batch.desired_returns])
    loss, grad_w, grad_b = nll_and_grads(params, x, batch.actions)
    if not np.isfinite(loss):
        raise TrainingDiverged(f"loss is {loss}")
    if adam is None:
        for layer in range(len(params.weights)):
            params.weights[layer] -= learning_rate * grad_w[layer]
            params.biases[layer] -= learning_rate * grad_b[layer]
    else:
        adam.t += 1
        correction = np.sqrt(1 - adam.beta2**adam.t) / (1 - adam.beta1**adam.t)
        for layer in range(len(params.weights)):
            for g, m, v, target in ((grad_w[layer], adam.m_w[layer], adam.v_w[layer],
                                     params.weights[layer]),
                                    (grad_b[layer], adam.m_b[layer], adam.v_b[layer],
                                     params.biases[layer])):
                m *= adam.beta1
                m += (1 - adam.beta1) * g
                v *= adam.beta2
                v += (1 - adam.beta2) * g * g
                target -= learning_rate * correction * m / (np.sqrt(v) + adam.eps)
    return loss


def sample_action(distribution, rng: np.random.Generator, mask=None) -> int:
    """Sample an action index proportionally to the masked, renormalized probabilities."""
    p = np.asarray(distribution, dtype=float).copy()
    if mask is not None:
        p = np.where(np.asarray(mask, dtype=bool), p, 0.0)
    total = p.sum()
    if total <= 0:
        raise ValueError("no action has positive probability after masking")
    return int(rng.choice(len(p), p=p / total))


def greedy_action(distribution, mask=None) -> int:
    """Most probable allowed action; ties break toward the lowest index."""
    p = np.asarray(distribution, dtype=float)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise ValueError("all actions are masked")
        p = np.where(mask, p, -np.inf)
    return int(np.argmax(p))


def save_params(params: PolicyParameters, path) -> None:
    """Write a checkpoint: shape header plus raw weight arrays."""
    meta = json.dumps({
        "format": 1,
        "obs_dim": params.obs_dim,
        "n_objectives": params.n_objectives,
        "n_actions": params.n_actions,
        "hidden_dims": list(params.hidden_dims),
    })
    arrays = {f"w{i}": w for i, w in enumerate(params.weights)}
    arrays.update({f"b{i}": b for i, b in enumerate(params.biases)})
    np.savez(path, meta=np.frombuffer(meta.encode(), dtype=np.uint8), **arrays)


def load_params(path) -> PolicyParameters:
    """Read a checkpoint written by :func:`save_params`."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("format") != 1:
            raise ValueError(f"unsupported checkpoint format {meta.get('format')}")
        n_layers = len(meta["hidden_dims"]) + 1
        weights = [data[f"w{i}"] for i in range(n_layers)]
        biases = [data[f"b{i}"] for i in range(n_layers)]
    return PolicyParameters(weights=weights, biases=biases,
                            obs_dim=meta["obs_dim"],
                            n_objectives=meta["n_objectives"],
                            n_actions=meta["n_actions"],
                            hidden_dims=tuple(meta["hidden_dims"]))
