from dataclasses import dataclass, asdict

from config.settings import COST_MS
from src.metrics.counters import OP_NAMES

ROUND_COST_MS = 5.0
AGGREGATE_COST_MS = 3.0


@dataclass(frozen=True)
class CostModel:
    """Simulated milliseconds per counted operation."""
    exp: float = COST_MS['exp']
    h: float = COST_MS['h']
    sig: float = COST_MS['sig']
    i: float = COST_MS['i']
    cp: float = COST_MS['cp']
    m: float = COST_MS['m']
    cs: float = COST_MS['cs']
    round_ms: float = ROUND_COST_MS
    aggregate_ms: float = AGGREGATE_COST_MS

    def __post_init__(self):
        if any(v < 0 for v in asdict(self).values()):
            raise ValueError("costs must be non-negative")

    def round_service_ms(self, updates):
        """Fixed round cost plus one aggregation step per neighbor update merged."""
        return self.round_ms + self.aggregate_ms * updates

    def service_ms(self, counters):
        return sum(getattr(self, name) * getattr(counters, name) for name in OP_NAMES)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_json(cls, json_data):
        return cls(**{k: float(v) for k, v in json_data.items()})
