import numpy as np

from src.exceptions import EmptyInput, LengthMismatch, NotNormalized

KL_EPSILON = 1e-12
NORMALIZATION_TOLERANCE = 1e-9
F1_FORMULAS = ('standard', 'as_printed')


def f1_score(predictions, truth, positive_class, formula='standard'):
    """
    One-vs-rest F1 for `positive_class`.

    `standard` is 2PR/(P+R); `as_printed` drops the factor 2. Both are 0 when
    P + R == 0.
    """
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if len(predictions) != len(truth):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truth)} labels")
    if len(truth) == 0:
        raise EmptyInput("f1_score needs at least one label")
    if formula not in F1_FORMULAS:
        raise ValueError(f"unknown f1 formula '{formula}'")

    predicted = predictions == positive_class
    actual = truth == positive_class
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    factor = 2.0 if formula == 'standard' else 1.0
    return factor * precision * recall / (precision + recall)


def macro_f1(predictions, truth, labels=None, formula='standard'):
    """Mean per-class F1 over `labels` (default: every label seen in either vector)."""
    if labels is None:
        labels = np.union1d(np.unique(predictions), np.unique(truth))
    scores = [f1_score(predictions, truth, label, formula) for label in labels]
    return float(np.mean(scores)) if scores else 0.0


def _check_distribution(p, name):
    if np.any(p < 0) or abs(p.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise NotNormalized(f"{name} is not a probability vector")


def kl_divergence(p, q):
    """KL(p || q) in nats; q is floored at 1e-12 where p has mass."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise LengthMismatch(f"distributions of length {len(p)} and {len(q)}")
    _check_distribution(p, 'p')
    _check_distribution(q, 'q')
    mask = p > 0
    q_safe = np.maximum(q[mask], KL_EPSILON)
    return float(np.sum(p[mask] * np.log(p[mask] / q_safe)))


def class_distribution(labels, classes):
    labels = np.asarray(labels, dtype=int)
    if len(labels) == 0:
        raise EmptyInput("no labels")
    counts = np.bincount(labels, minlength=classes)[:classes].astype(float)
    return counts / counts.sum()
