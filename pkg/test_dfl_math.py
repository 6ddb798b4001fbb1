#!/usr/bin/env python3
"""
DFL math tests: TopK compression, F1, KL divergence, softmax weighting,
aggregation, learning-rate adaptation and the MLP gradient.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.dfl.compression import SparseUpdate, compress_topk, decompress  # noqa: E402
from src.dfl.metrics import class_distribution, f1_score, kl_divergence, macro_f1  # noqa: E402
from src.dfl.mlp import Architecture, ModelParameters, init_model, local_update, loss_and_grad  # noqa: E402
from src.dfl.weighting import (  # noqa: E402
    NeighborState, aggregate, learning_rate_round, normalize_weights, update_alpha, weight_adjustment_factor)
from src.exceptions import (  # noqa: E402
    EmptyInput, IndexOutOfRange, LengthMismatch, NotNormalized, ShapeMismatch)

SMALL = Architecture(4, 5, 3)


def params(*layers):
    return ModelParameters([np.array(layer, dtype=float) for layer in layers])


def test_topk_keeps_largest_magnitudes_with_low_index_ties():
    update = compress_topk(params([0.1, -3.0, 2.0, -3.0, 0.5]), 2)
    assert update.entries(0) == [(1, -3.0), (3, -3.0)]
    update = compress_topk(params([0.1, -3.0, 2.0, -3.0, 0.5]), 3)
    assert update.entries(0) == [(1, -3.0), (2, 2.0), (3, -3.0)]


def test_topk_per_layer_and_short_layers():
    update = compress_topk(params([1.0, 2.0], [5.0, -6.0, 0.0, 7.0]), 3)
    assert update.entry_counts == [2, 3]
    dense = decompress(update)
    assert dense.layers[0].tolist() == [1.0, 2.0]
    assert dense.layers[1].tolist() == [5.0, -6.0, 0.0, 7.0]


def test_topk_equal_magnitudes_tie_break():
    update = compress_topk(params([1.0, -1.0, 1.0, -1.0]), 2)
    assert update.entries(0) == [(0, 1.0), (1, -1.0)]


def test_topk_rejects_zero_k():
    with pytest.raises(ValueError):
        compress_topk(params([1.0]), 0)


def test_decompress_zero_fills():
    update = SparseUpdate.from_entries([[(0, 2.5), (3, -1.0)]], [5], 2)
    assert decompress(update).layers[0].tolist() == [2.5, 0.0, 0.0, -1.0, 0.0]


def test_decompress_errors():
    with pytest.raises(IndexOutOfRange):
        decompress(SparseUpdate.from_entries([[(5, 1.0)]], [5], 1))
    bad = SparseUpdate((np.array([0, 1]),), (np.array([1.0]),), (5,), 2)
    with pytest.raises(LengthMismatch):
        decompress(bad)


def test_f1_formulas():
    predictions = [0, 0, 1, 1]
    truth = [0, 1, 1, 1]
    assert f1_score(predictions, truth, 1) == pytest.approx(0.8)
    assert f1_score(predictions, truth, 1, formula='as_printed') == pytest.approx(0.4)
    assert f1_score([0, 0], [0, 0], 1) == 0.0
    with pytest.raises(LengthMismatch):
        f1_score([0], [0, 1], 0)
    with pytest.raises(EmptyInput):
        f1_score([], [], 0)


def test_macro_f1_perfect_and_absent_class():
    assert macro_f1([0, 1, 2], [0, 1, 2]) == 1.0
    assert macro_f1([0, 1], [0, 1], labels=[0, 1, 2]) == pytest.approx(2 / 3)


def test_kl_properties():
    p = np.array([0.2, 0.3, 0.5])
    q = np.array([0.4, 0.4, 0.2])
    assert kl_divergence(p, p) == pytest.approx(0.0)
    assert kl_divergence(p, q) > 0
    assert kl_divergence(p, q) != pytest.approx(kl_divergence(q, p))
    # q without mass where p has some: finite thanks to the floor.
    assert np.isfinite(kl_divergence([0.5, 0.5], [1.0, 0.0]))
    # p without mass where q has some contributes nothing.
    assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(np.log(2))


def test_kl_input_checks():
    with pytest.raises(NotNormalized):
        kl_divergence([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(LengthMismatch):
        kl_divergence([1.0], [0.5, 0.5])


def random_distribution(rng, size):
    p = rng.dirichlet(np.full(size, 0.5))
    p[rng.random(size) < 0.2] = 0.0
    if p.sum() == 0.0:
        p[rng.integers(size)] = 1.0
    return p / p.sum()


def test_kl_nonnegative_and_zero_on_itself_for_random_pairs():
    rng = np.random.default_rng(21)
    for _ in range(1000):
        size = int(rng.integers(2, 9))
        p, q = random_distribution(rng, size), random_distribution(rng, size)
        assert kl_divergence(p, q) >= -1e-12
        assert abs(kl_divergence(p, p)) <= 1e-12



def test_class_distribution():
    assert class_distribution([0, 0, 1, 3], 4).tolist() == [0.5, 0.25, 0.0, 0.25]
    with pytest.raises(EmptyInput):
        class_distribution([], 4)


def test_softmax_weights():
    weights = normalize_weights([1.0, 2.0, 3.0])
    assert weights.sum() == pytest.approx(1.0)
    assert weights[2] > weights[1] > weights[0]
    huge = normalize_weights([1000.0, 1000.0])
    assert huge.tolist() == pytest.approx([0.5, 0.5])
    with pytest.raises(EmptyInput):
        normalize_weights([])


def test_weight_adjustment_factor():
    assert weight_adjustment_factor(0.8, 0.5, 1.0, 0.5) == pytest.approx(1.05)


def test_aggregate_matches_brute_force():
    rng = np.random.default_rng(4)
    models = [params(rng.normal(size=6), rng.normal(size=3)) for _ in range(3)]
    weights = normalize_weights([0.1, 0.7, 0.2])
    result = aggregate(list(zip(weights, models)))
    for layer in range(2):
        expected = sum(w * m.layers[layer] for w, m in zip(weights, models))
        assert np.allclose(result.layers[layer], expected)

    uniform = aggregate([(1 / 3, m) for m in models])
    assert np.allclose(uniform.layers[0], np.mean([m.layers[0] for m in models], axis=0))


def test_aggregate_errors():
    with pytest.raises(EmptyInput):
        aggregate([])
    with pytest.raises(NotNormalized):
        aggregate([(0.5, params([1.0]))])
    with pytest.raises(ShapeMismatch):
        aggregate([(0.5, params([1.0])), (0.5, params([1.0, 2.0]))])


def test_aggregate_ignores_neighbor_order():
    rng = np.random.default_rng(9)
    models = [params(rng.normal(size=6), rng.normal(size=3)) for _ in range(5)]
    updates = list(zip(normalize_weights(rng.normal(size=5)), models))
    expected = aggregate(updates)
    for _ in range(20):
        shuffled = [updates[i] for i in rng.permutation(len(updates))]
        result = aggregate(shuffled)
        for got, want in zip(result.layers, expected.layers):
            assert np.allclose(got, want, rtol=0.0, atol=1e-12)



def test_learning_rate_zero_sum_adjustment_keeps_base_rate():
    states = [NeighborState('a', waf=0.2, alpha=0.01), NeighborState('b', waf=0.8, alpha=0.01)]
    eta = learning_rate_round(0.01, states)
    assert eta == pytest.approx(0.01)
    assert states[1].eta > states[0].eta


def test_learning_rate_clamped():
    states = [NeighborState('a', waf=0.0, alpha=100.0), NeighborState('b', waf=10.0, alpha=100.0)]
    learning_rate_round(0.01, states)
    assert states[0].eta == pytest.approx(0.001)
    assert states[1].eta == pytest.approx(0.1)
    with pytest.raises(EmptyInput):
        learning_rate_round(0.01, [])


def test_learning_rate_averages_before_clamping():
    # adjustments of -0.2 and +0.2 fall outside the per-neighbor range but cancel in the mean
    states = [NeighborState('a', waf=0.0, alpha=1.0), NeighborState('b', waf=0.4, alpha=1.0)]
    assert learning_rate_round(0.01, states) == pytest.approx(0.01)
    assert states[0].eta == pytest.approx(0.001)
    assert states[1].eta == pytest.approx(0.1)
    one_sided = [NeighborState('a', waf=0.0, alpha=1.0), NeighborState('b', waf=0.0, alpha=1.0)]
    assert learning_rate_round(0.01, one_sided, adjustment=lambda state: 1.0) == pytest.approx(0.1)


def test_update_alpha():
    assert update_alpha(0.1, 1.0, 0.9, 0.5, gamma_trailing=0.5) == pytest.approx(0.3)
    assert update_alpha(0.1, 1.0, 0.0, 0.5, gamma_trailing=1.0) == 0.0
    assert update_alpha(0.1, 1.0, 1.0, 1.0, gamma_trailing=0.0, alpha_max=0.5) == 0.5
    assert update_alpha(0.1, 1.0, 0.7, 0.5) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        update_alpha(0.1, 1.0, 0.7, 0.0)


def test_neighbor_state_rejects_unnormalized_distribution():
    with pytest.raises(NotNormalized):
        NeighborState('a', class_distribution=[0.5, 0.4])


@pytest.mark.parametrize('seed', [0, 1, 2, 3, 4])
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    model = init_model(SMALL, seed)
    X = rng.uniform(0.0, 1.0, size=(6, SMALL.input_dim))
    y = rng.integers(0, SMALL.classes, size=6)
    _, grad = loss_and_grad(model, X, y)
    eps = 1e-6
    for layer_index, layer in enumerate(model.layers):
        numeric = np.zeros_like(layer)
        for j in range(len(layer)):
            plus, minus = model.copy(), model.copy()
            plus.layers[layer_index][j] += eps
            minus.layers[layer_index][j] -= eps
            numeric[j] = (loss_and_grad(plus, X, y)[0] - loss_and_grad(minus, X, y)[0]) / (2 * eps)
        assert np.allclose(numeric, grad.layers[layer_index], rtol=1e-4, atol=1e-7)


def test_local_update_step():
    model = init_model(SMALL, 0)
    X = np.full((2, SMALL.input_dim), 0.5)
    y = np.array([0, 1])
    assert local_update(model, model, 0.0, (X, y)).equals(model)
    stepped = local_update(model, model, 0.1, (X, y))
    _, grad = loss_and_grad(model, X, y)
    assert np.allclose(stepped.layers[1], model.layers[1] - 0.1 * grad.layers[1])
    with pytest.raises(ValueError):
        local_update(model, model, -0.1, (X, y))
    with pytest.raises(ShapeMismatch):
        local_update(model, init_model(Architecture(4, 6, 3), 0), 0.1, (X, y))


def test_forward_checks_feature_count():
    with pytest.raises(ShapeMismatch):
        loss_and_grad(init_model(SMALL, 0), np.zeros((1, 3)), [0])
