from dataclasses import dataclass

import numpy as np

from src.dfl.data import device_signature
from src.dfl.mlp import predict_proba
from src.metrics.counters import charge


@dataclass(frozen=True)
class ContextPrediction:
    context_class: int
    confidence: tuple
    features: tuple

    @property
    def score(self):
        return self.confidence[self.context_class]


def classify(model, features):
    """Class probabilities for one feature vector; one model inference."""
    charge('i')
    return predict_proba(model, np.asarray(features, dtype=float).reshape(1, -1))[0]


def predict_context(model, device_id):
    """
    Look up a device's context from the model using only its identifier.

    Returns:
        ContextPrediction (argmax class, softmax vector, featurized id)
    """
    arch = model.architecture
    features = device_signature(device_id, arch.input_dim, arch.classes)
    probs = classify(model, features)
    return ContextPrediction(int(np.argmax(probs)), tuple(float(p) for p in probs), tuple(float(x) for x in features))
