"""
Neighbor weighting and learning-rate adaptation for one domain's coordinator.

    waf_d    = lambda1 * F1_d + lambda2 * KL(P_d || P_i)
    w_d      = softmax(waf)_d
    m_i      = sum_d w_d * m_d
    eta_d    = eta0 + alpha_d * (waf_d - mean waf)
    eta_i    = mean_d eta_d, clamped to [eta0/10, 10*eta0]
    alpha_d += beta * waf_d * (F1_d - trailing mean F1_d), clamped to [0, alpha_max]
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from config.settings import ALPHA0, ALPHA_MAX, BASE_LEARNING_RATE, F1_HISTORY
from src.dfl.metrics import NORMALIZATION_TOLERANCE
from src.dfl.mlp import ModelParameters
from src.exceptions import EmptyInput, NotNormalized, ShapeMismatch


@dataclass
class NeighborState:
    domain_id: str
    waf: float = 0.0
    alpha: float = ALPHA0
    eta: float = BASE_LEARNING_RATE
    f1: float = 0.0
    class_distribution: object = None
    last_update: object = None
    kl: float = 0.0
    weight: float = 0.0
    stale_rounds: int = 0
    f1_history: deque = field(default_factory=lambda: deque(maxlen=F1_HISTORY))

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.class_distribution is not None:
            self.set_distribution(self.class_distribution)

    def set_distribution(self, distribution):
        distribution = np.asarray(distribution, dtype=float)
        if np.any(distribution < 0) or abs(distribution.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise NotNormalized(f"class distribution from {self.domain_id} is not normalized")
        self.class_distribution = distribution

    def trailing_f1(self):
        return float(np.mean(self.f1_history)) if self.f1_history else self.f1


def weight_adjustment_factor(f1, kl, lambda1, lambda2):
    return lambda1 * f1 + lambda2 * kl


def normalize_weights(wafs):
    """Softmax with max-subtraction."""
    wafs = np.asarray(wafs, dtype=float)
    if wafs.size == 0:
        raise EmptyInput("no weight adjustment factors")
    e = np.exp(wafs - wafs.max())
    return e / e.sum()


def aggregate(updates):
    """
    Weighted average of dense models.

    Args:
        updates: list of (weight, ModelParameters); weights sum to 1

    Returns:
        ModelParameters
    """
    if not updates:
        raise EmptyInput("nothing to aggregate")
    weights = np.array([w for w, _ in updates], dtype=float)
    if abs(weights.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise NotNormalized(f"aggregation weights sum to {weights.sum()}")
    reference = updates[0][1].layer_lengths
    for _, model in updates:
        if model.layer_lengths != reference:
            raise ShapeMismatch(f"layer lengths {model.layer_lengths} vs {reference}")

    layers = [np.zeros(length) for length in reference]
    for w, model in updates:
        for acc, layer in zip(layers, model.layers):
            acc += w * layer
    return ModelParameters(layers, updates[0][1].architecture)


def default_adjustment(neighbor_states):
    """f(waf_d, alpha_d) = alpha_d * (waf_d - mean waf); zero-sum across neighbors."""
    mean_waf = float(np.mean([s.waf for s in neighbor_states]))
    return lambda state: state.alpha * (state.waf - mean_waf)


def learning_rate_round(eta0, neighbor_states, adjustment=None):
    """
    Per-neighbor rates eta_d = eta0 + f(state), then their mean, clamped to
    [eta0/10, 10*eta0]. Each state stores its own rate clamped the same way;
    the mean is taken over the unclamped rates.
    """
    if not neighbor_states:
        raise EmptyInput("learning_rate_round needs at least one neighbor")
    if adjustment is None:
        adjustment = default_adjustment(neighbor_states)
    low, high = eta0 / 10.0, eta0 * 10.0
    raw = [eta0 + adjustment(state) for state in neighbor_states]
    for state, eta_d in zip(neighbor_states, raw):
        state.eta = min(max(eta_d, low), high)
    eta = float(np.mean(raw))
    return min(max(eta, low), high)


def update_alpha(alpha, waf, gamma, beta, gamma_trailing=None, alpha_max=ALPHA_MAX):
    """alpha + beta * waf * (gamma - gamma_trailing), clamped to [0, alpha_max]."""
    if not 0 < beta <= 1:
        raise ValueError("beta must be in (0, 1]")
    if gamma_trailing is None:
        gamma_trailing = gamma
    delta = waf * (gamma - gamma_trailing)
    return min(max(alpha + beta * delta, 0.0), alpha_max)
