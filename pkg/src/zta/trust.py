"""
Trust engine: a weighted rule table over the request and the device's context.

Each rule yields a contribution in [0,1]; the score is the weighted mean of
the contributions, clamped to [0,1]. With no context the score is the floor.
"""

import logging
from dataclasses import dataclass, field

from config.settings import (
    ACCESS_LEVEL_RISK, ANOMALOUS_CLASSES, CONFIDENCE_TARGET, TIME_WINDOW_HOURS, TRUST_FLOOR,
    TRUST_WEIGHTS)
from src.dfl.inference import classify
from src.models.context import TrustScore

logger = logging.getLogger(__name__)

MS_PER_HOUR = 3_600_000
RULE_NAMES = ('known_device', 'time_window', 'access_level', 'context_anomaly', 'model_confidence')


@dataclass(frozen=True)
class TrustRules:
    weights: dict = field(default_factory=lambda: dict(TRUST_WEIGHTS))
    time_window: tuple = TIME_WINDOW_HOURS
    access_level_risk: dict = field(default_factory=lambda: dict(ACCESS_LEVEL_RISK))
    anomalous_classes: frozenset = frozenset(ANOMALOUS_CLASSES)
    confidence_target: float = CONFIDENCE_TARGET
    floor: float = TRUST_FLOOR

    def __post_init__(self):
        unknown = set(self.weights) - set(RULE_NAMES)
        if unknown:
            raise ValueError(f"unknown trust rules: {sorted(unknown)}")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("rule weights must be non-negative")
        start, end = self.time_window
        if not 0 <= start < end <= 24:
            raise ValueError("time window must satisfy 0 <= start < end <= 24")
        if not 0 <= self.floor <= 1:
            raise ValueError("trust floor must be in [0, 1]")
        if self.confidence_target <= 0:
            raise ValueError("confidence target must be positive")
        object.__setattr__(self, 'anomalous_classes', frozenset(self.anomalous_classes))
        object.__setattr__(self, 'time_window', tuple(self.time_window))

    def to_dict(self):
        return {
            'weights': dict(self.weights),
            'time_window': list(self.time_window),
            'access_level_risk': dict(self.access_level_risk),
            'anomalous_classes': sorted(self.anomalous_classes),
            'confidence_target': self.confidence_target,
            'floor': self.floor,
        }

    @classmethod
    def from_json(cls, json_data):
        defaults = cls()
        return cls(
            weights={**defaults.weights, **json_data.get('weights', {})},
            time_window=tuple(json_data.get('time_window', defaults.time_window)),
            access_level_risk={**defaults.access_level_risk, **json_data.get('access_level_risk', {})},
            anomalous_classes=frozenset(json_data.get('anomalous_classes', defaults.anomalous_classes)),
            confidence_target=float(json_data.get('confidence_target', defaults.confidence_target)),
            floor=float(json_data.get('floor', defaults.floor)),
        )


class TrustEngine:
    def __init__(self, rules=None, storage=None, model_source=None):
        """
        Args:
            rules: TrustRules
            storage: DomainStorage used by the known-device rule
            model_source: Callable returning the current model, or None
        """
        self.rules = rules or TrustRules()
        self.storage = storage
        self.model_source = model_source or (lambda: None)

    def _known_device(self, device_id):
        if self.storage is None:
            return 0.0
        return 1.0 if self.storage.is_registered(device_id) or self.storage.has_context(device_id) else 0.0

    def _in_window(self, timestamp_ms):
        hour = int(timestamp_ms // MS_PER_HOUR) % 24
        start, end = self.rules.time_window
        return 1.0 if start <= hour < end else 0.0

    def assess_trust(self, request, context):
        if context is None:
            return TrustScore(self.rules.floor, {'floor': self.rules.floor})

        components = {
            'known_device': self._known_device(request.device_id),
            'time_window': self._in_window(context.timestamp),
            'access_level': self.rules.access_level_risk.get(request.access_level.value, 0.0),
            'context_anomaly': 0.0 if context.context_class in self.rules.anomalous_classes else 1.0,
        }
        model = self.model_source()
        if model is not None:
            probs = classify(model, context.feature_vector)
            confidence = float(probs[context.context_class])
            components['model_confidence'] = min(1.0, confidence / self.rules.confidence_target)

        total_weight = sum(self.rules.weights.get(name, 0.0) for name in components)
        if total_weight == 0:
            return TrustScore(self.rules.floor, components)
        value = sum(self.rules.weights.get(name, 0.0) * c for name, c in components.items()) / total_weight
        return TrustScore(min(max(value, 0.0), 1.0), components)


def assess_trust(te, request, context):
    return te.assess_trust(request, context)
