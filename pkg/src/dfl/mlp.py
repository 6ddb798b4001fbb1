"""
Multilayer perceptron in NumPy: input -> hidden (ReLU) -> classes (softmax),
trained with mean cross-entropy.

Parameters travel as one flat vector per layer: the weight matrix in
row-major order (fan_in x fan_out) followed by the bias vector.
"""

from dataclasses import dataclass

import numpy as np

from config.settings import CLASS_COUNT, HIDDEN_DIM, INPUT_DIM
from src.exceptions import NonFiniteGradient, ShapeMismatch


@dataclass(frozen=True)
class Architecture:
    input_dim: int = INPUT_DIM
    hidden_dim: int = HIDDEN_DIM
    classes: int = CLASS_COUNT
    activations: tuple = ('relu', 'softmax')

    def __post_init__(self):
        if min(self.input_dim, self.hidden_dim, self.classes) < 1:
            raise ValueError("layer sizes must be positive")
        object.__setattr__(self, 'activations', tuple(self.activations))

    @property
    def layer_shapes(self):
        return [(self.input_dim, self.hidden_dim), (self.hidden_dim, self.classes)]

    @property
    def layer_sizes(self):
        return [fan_in * fan_out + fan_out for fan_in, fan_out in self.layer_shapes]

    def to_dict(self):
        return {
            'input_dim': self.input_dim,
            'hidden_dim': self.hidden_dim,
            'classes': self.classes,
            'activations': list(self.activations),
        }

    @classmethod
    def from_json(cls, json_data):
        return cls(
            input_dim=int(json_data.get('input_dim', INPUT_DIM)),
            hidden_dim=int(json_data.get('hidden_dim', HIDDEN_DIM)),
            classes=int(json_data.get('classes', CLASS_COUNT)),
            activations=tuple(json_data.get('activations', ('relu', 'softmax'))),
        )


class ModelParameters:
    """Ordered dense layer vectors plus the architecture they belong to."""

    def __init__(self, layers, architecture=None):
        self.layers = [np.asarray(layer, dtype=float).ravel().copy() for layer in layers]
        self.architecture = architecture
        if architecture is not None:
            sizes = [len(layer) for layer in self.layers]
            if sizes != architecture.layer_sizes:
                raise ShapeMismatch(f"layer sizes {sizes} do not match {architecture.layer_sizes}")

    @property
    def layer_lengths(self):
        return [len(layer) for layer in self.layers]

    def copy(self):
        return ModelParameters(self.layers, self.architecture)

    def unpack(self):
        """[(W, b), ...] views in forward order."""
        pairs = []
        for layer, (fan_in, fan_out) in zip(self.layers, self.architecture.layer_shapes):
            split = fan_in * fan_out
            pairs.append((layer[:split].reshape(fan_in, fan_out), layer[split:]))
        return pairs

    @classmethod
    def pack(cls, pairs, architecture):
        return cls([np.concatenate([W.ravel(), b.ravel()]) for W, b in pairs], architecture)

    def is_finite(self):
        return all(np.all(np.isfinite(layer)) for layer in self.layers)

    def equals(self, other):
        return self.layer_lengths == other.layer_lengths and all(
            np.array_equal(a, b) for a, b in zip(self.layers, other.layers))

    def __repr__(self):
        return f"ModelParameters(layers={self.layer_lengths})"


def init_model(architecture, seed=0):
    """He-initialised weights, zero biases; same seed, same model."""
    rng = np.random.default_rng(seed)
    pairs = []
    for fan_in, fan_out in architecture.layer_shapes:
        W = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        pairs.append((W, np.zeros(fan_out)))
    return ModelParameters.pack(pairs, architecture)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params, X):
    """Returns (class probabilities, cache for the backward pass)."""
    (W1, b1), (W2, b2) = params.unpack()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != W1.shape[0]:
        raise ShapeMismatch(f"expected {W1.shape[0]} input features, got {X.shape[1]}")
    z1 = X @ W1 + b1
    h = np.maximum(z1, 0.0)
    z2 = h @ W2 + b2
    return _softmax(z2), (X, z1, h, z2)


def predict_proba(params, X):
    probs, _ = forward(params, X)
    return probs


def predict(params, X):
    return predict_proba(params, X).argmax(axis=1)


def loss_and_grad(params, X, y):
    """Mean cross-entropy over the batch and its gradient as ModelParameters."""
    (W1, b1), (W2, b2) = params.unpack()
    probs, (X, z1, h, z2) = forward(params, X)
    y = np.asarray(y, dtype=int)
    n = X.shape[0]

    shifted = z2 - z2.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), y].mean()

    dz2 = probs.copy()
    dz2[np.arange(n), y] -= 1.0
    dz2 /= n
    dW2 = h.T @ dz2
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ W2.T) * (z1 > 0)
    dW1 = X.T @ dz1
    db1 = dz1.sum(axis=0)
    return float(loss), ModelParameters.pack([(dW1, db1), (dW2, db2)], params.architecture)


def local_update(model, aggregated, eta, batch):
    """
    One gradient step: model - eta * grad J(aggregated) on the batch.

    Args:
        model: Parameters the step is applied to
        aggregated: Parameters the gradient is evaluated at
        eta: Learning rate (>= 0)
        batch: (X, y) tuple

    Returns:
        New ModelParameters
    """
    if eta < 0:
        raise ValueError("learning rate must be non-negative")
    if model.layer_lengths != aggregated.layer_lengths:
        raise ShapeMismatch("model and aggregated parameters differ in shape")
    X, y = batch
    _, grad = loss_and_grad(aggregated, X, y)
    if not grad.is_finite():
        raise NonFiniteGradient("gradient contains NaN or inf")
    return ModelParameters([m - eta * g for m, g in zip(model.layers, grad.layers)], model.architecture)
