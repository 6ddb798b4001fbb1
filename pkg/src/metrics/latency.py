import math
from dataclasses import dataclass
from enum import Enum

import pandas as pd

from src.exceptions import EmptyInput


class Phase(str, Enum):
    DATA_SHARING = 'data_sharing'
    FULL_PREAUTHORIZATION = 'full_preauthorization'
    TOKEN_VERIFICATION = 'token_verification'
    INTRA_AUTHORIZATION = 'intra_authorization'


@dataclass(frozen=True)
class LatencySample:
    request_id: int
    phase: Phase
    start_ms: float
    end_ms: float

    def __post_init__(self):
        object.__setattr__(self, 'phase', Phase(self.phase))
        if self.end_ms < self.start_ms:
            raise ValueError("latency sample ends before it starts")

    @property
    def ms(self):
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class ThroughputRecord:
    domains: int
    devices: int
    window_s: float
    completed: int

    @property
    def rate_rps(self):
        return self.completed / self.window_s if self.window_s > 0 else 0.0


def percentile_latency(samples, phase, p):
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest latency of `phase`."""
    phase = Phase(phase)
    values = sorted(s.ms for s in samples if s.phase == phase)
    if not values:
        raise EmptyInput(f"no {phase.value} samples")
    if not 0 < p <= 100:
        raise ValueError("percentile must be in (0, 100]")
    rank = max(1, math.ceil(p / 100.0 * len(values)))
    return values[rank - 1]


def throughput_curve(runs):
    """
    Throughput table keyed by (n, devices); runs sharing a key are averaged.

    Args:
        runs: iterable of ThroughputRecord

    Returns:
        DataFrame with columns n, devices, rate_rps sorted by n then devices
    """
    rows = [{'n': r.domains, 'devices': r.devices, 'rate_rps': r.rate_rps} for r in runs]
    if not rows:
        raise EmptyInput("no throughput runs")
    frame = pd.DataFrame(rows)
    return (frame.groupby(['n', 'devices'], as_index=False)['rate_rps'].mean()
            .sort_values(['n', 'devices']).reset_index(drop=True))
