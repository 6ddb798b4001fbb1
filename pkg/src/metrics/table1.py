"""
Per-step computation overhead: a fresh deployment measures one intra-domain
and one cross-domain request (each with a fresh registration), and the counts
are checked against the expected totals.
"""

import logging

from src.dfl.mlp import init_model
from src.metrics.counters import Meter, OpCounters, diff, scope_counters, use_meter
from src.zta.authentication import Device
from src.zta.domain import Domain

logger = logging.getLogger(__name__)

INTRA_LABEL = 'table1:intra_domain'
CROSS_LABEL = 'table1:cross_domain'

EXPECTED = {
    INTRA_LABEL: OpCounters(exp=3, h=2, sig=1, i=2, cp=1),
    CROSS_LABEL: OpCounters(exp=3, h=3, sig=2, i=2, cp=1, m=4, cs=2),
}

STEP_COSTS = {
    'registration': OpCounters(exp=2, h=1, sig=1),
    'authentication': OpCounters(exp=1, h=1),
    'cross_domain_transmission': OpCounters(m=4, cs=2),
    'authorization': OpCounters(i=2, cp=1),
    'token_issuance': OpCounters(h=1, sig=1),
}


class CounterCollector:
    """Running OpCounters per label."""

    def __init__(self):
        self.totals = {}

    def add(self, label, counters):
        self.totals[label] = self.totals.get(label, OpCounters()) + counters

    def rows(self):
        return [{'label': label, **self.totals[label].to_dict()} for label in sorted(self.totals)]


def measure_table1(seed=0, resource='telemetry', access_level='read'):
    """
    Run one intra-domain and one cross-domain request, each preceded by the
    device's registration, on a private meter.

    Returns:
        {label: OpCounters}
    """
    meter = Meter()
    with use_meter(meter):
        home = Domain('dom-a', seed=seed)
        remote = Domain('dom-b', seed=seed + 1)
        home.peer_with(remote)
        home.attach_model(init_model(home.architecture, seed))
        remote.attach_model(init_model(remote.architecture, seed + 1))

        local_device = Device('bench-local', key_seed=seed + 100)
        with scope_counters(INTRA_LABEL) as intra:
            local_device.enroll(home.am)
            request = local_device.make_request(home.domain_id, resource, access_level, 'read telemetry')
            home.handle_local(request, now=0)

        roaming_device = Device('bench-roaming', key_seed=seed + 101)
        with scope_counters(CROSS_LABEL) as cross:
            roaming_device.enroll(home.am)
            request = roaming_device.make_request(remote.domain_id, resource, access_level, 'read telemetry')
            home.handle_local(request, now=0)

    observed = {INTRA_LABEL: diff(intra), CROSS_LABEL: diff(cross)}
    for label, counters in observed.items():
        logger.info("%s: %s", label, counters)
    return observed


def table1_conformance(rows):
    """
    Args:
        rows: {label: OpCounters} or counter rows as written to counters.csv

    Returns:
        list of (label, expected, observed, 'PASS' | 'FAIL') for every expected row
    """
    if not isinstance(rows, dict):
        rows = {row['label']: OpCounters.from_json(row) for row in rows}
    results = []
    for label, expected in EXPECTED.items():
        observed = rows.get(label)
        status = 'PASS' if observed == expected else 'FAIL'
        results.append((label, expected, observed, status))
    return results
