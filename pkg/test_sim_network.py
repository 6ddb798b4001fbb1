#!/usr/bin/env python3
"""
Simulation tests: event ordering, links and latency, workload generation,
in-flight limits, cross-domain message flow, timeouts, mobility, pretraining
and run determinism.
"""

import io
import json
import sys
from collections import Counter
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config.settings import RESOURCES  # noqa: E402
from src.dfl.data import build_partition  # noqa: E402
from src.dfl.engine import TrainingHyperparams  # noqa: E402
from src.dfl.mlp import Architecture  # noqa: E402
from src.exceptions import InvariantViolation, NotNeighbors, PastEvent  # noqa: E402
from src.main import build_domains, run_cell  # noqa: E402
from src.metrics.cost import CostModel  # noqa: E402
from src.metrics.latency import Phase  # noqa: E402
from src.metrics.table1 import CounterCollector  # noqa: E402
from src.models.scenario import DflConfig, ScenarioConfig, TopologyConfig, WorkloadConfig, ZtaConfig  # noqa: E402
from src.models.request import AccessLevel  # noqa: E402
from src.sim.events import EventKind, EventQueue  # noqa: E402
from src.sim.simulation import Simulation, SimulationSettings, build_trainers, untrained_models  # noqa: E402
from src.sim.topology import Topology  # noqa: E402
from src.sim.workload import Workload, generate_workload, place_devices  # noqa: E402
from src.zta.authentication import Device  # noqa: E402

# Service times under the default cost model (ms)
INTRA_SERVICE = 1.0 + 0.05 + 2 * 1.5 + 0.5
SEAL_SERVICE = 2 * 1.0 + 0.1
PREAUTH_SERVICE = 2 * 1.0 + 0.1 + 1.05 + 2 * 1.5 + 0.5 + 0.05 + 1.0


def build_sim(topology, device_count=4, settings=None, seed=0, collector=None, trace=None):
    arch = Architecture()
    domains = build_domains(topology, ZtaConfig(), arch, seed)
    untrained_models(domains, arch, seed)
    sim = Simulation(topology, domains, settings, collector, trace)
    placement = place_devices(device_count, topology)
    devices = {d: Device(d, key_seed=1000 + k) for k, d in enumerate(sorted(placement))}
    sim.enroll_devices(devices, placement)
    return sim, placement


def run(topology, device_count=4, requests=20, fraction=0.0, q=1, settings=None, seed=0):
    sim, placement = build_sim(topology, device_count, settings, seed)
    specs = generate_workload(Workload(device_count, requests, fraction, q, seed), topology, RESOURCES, placement)
    return sim, sim.run_workload(specs, q)


def small_scenario(seed=5):
    return ScenarioConfig(
        name='small',
        seed=seed,
        topology=TopologyConfig(kind='mesh', domains=(3,)),
        workload=WorkloadConfig(devices=6, requests=30, parallelism=2, cross_domain_fraction=0.5),
        dfl=DflConfig(hyperparams=TrainingHyperparams(rounds=2), devices=12, records_per_device=5,
                      test_records_per_device=2),
    )


def test_events_run_in_time_then_insertion_order():
    queue = EventQueue()
    queue.at(5.0, EventKind.ROUND_TICK, name='b')
    queue.at(1.0, EventKind.ROUND_TICK, name='a')
    queue.at(5.0, EventKind.ROUND_TICK, name='c')
    seen = []
    queue.run_until(lambda e: seen.append(e.payload['name']))
    assert seen == ['a', 'b', 'c']
    assert queue.clock == 5.0
    assert [entry['seq'] for entry in queue.log] == [1, 0, 2]


def test_scheduling_in_the_past_rejected():
    queue = EventQueue()
    queue.at(10.0, EventKind.ROUND_TICK)
    queue.run_until()
    with pytest.raises(PastEvent):
        queue.at(9.0, EventKind.ROUND_TICK)
    queue.at(10.0, EventKind.ROUND_TICK)


def test_run_until_stops_at_horizon():
    queue = EventQueue()
    queue.at(1.0, EventKind.ROUND_TICK)
    queue.at(50.0, EventKind.ROUND_TICK)
    queue.run_until(until=20.0)
    assert len(queue) == 1
    assert queue.clock == 20.0


def test_topology_shapes():
    star = Topology.star(3)
    assert star.neighbors('dom-0') == ['dom-1', 'dom-2', 'dom-3']
    assert star.issuing_domains() == ['dom-1', 'dom-2', 'dom-3']
    assert star.size_label == 3
    assert Topology.mesh(4).neighbors('dom-2') == ['dom-0', 'dom-1', 'dom-3']
    assert Topology.ring(4).neighbors('dom-0') == ['dom-1', 'dom-3']
    assert Topology.mesh(1).neighbors('dom-0') == []
    with pytest.raises(ValueError):
        Topology(['a', 'b'], {('a', 'c')})
    with pytest.raises(ValueError):
        Topology(['a'], {('a', 'a')})


def test_send_cross_domain_adds_link_latency():
    sim, _ = build_sim(Topology.star(2), device_count=2)
    event = sim.send_cross_domain('dom-1', 'dom-0', b'x' * 100, type='reply', request_id=0)
    assert event.time_ms == pytest.approx(10.0)
    with pytest.raises(NotNeighbors):
        sim.send_cross_domain('dom-1', 'dom-2', b'x')


def test_send_cross_domain_serialization_delay():
    settings = SimulationSettings(link_rate_kbps=8.0)
    sim, _ = build_sim(Topology.mesh(2), device_count=2, settings=settings)
    event = sim.send_cross_domain('dom-0', 'dom-1', b'x' * 100, depart_ms=3.0, type='reply', request_id=0)
    assert event.time_ms == pytest.approx(3.0 + 10.0 + 100.0)
    assert event.payload['min_arrival_ms'] == pytest.approx(13.0)


def test_early_arrival_violates_causality():
    sim, _ = build_sim(Topology.mesh(2), device_count=2)
    sim.queue.at(5.0, EventKind.MESSAGE_ARRIVAL, src='dom-0', dst='dom-1', type='reply', request_id=0,
                 min_arrival_ms=10.0, _body=b'')
    with pytest.raises(InvariantViolation):
        sim.run_workload([])


def test_workload_splits_evenly_and_respects_ceilings():
    topology = Topology.mesh(3)
    specs = generate_workload(Workload(7, 100, 0.5, 1, 3), topology, RESOURCES)
    per_device = Counter(s.device_id for s in specs)
    assert len(per_device) == 7
    assert max(per_device.values()) - min(per_device.values()) <= 1
    for spec in specs:
        assert spec.access_level.rank <= AccessLevel(RESOURCES[spec.resource]).rank
        if spec.cross_domain:
            assert spec.target_domain in topology.neighbors(spec.home_domain)
    assert generate_workload(Workload(7, 100, 0.5, 1, 3), topology, RESOURCES) == specs


def test_workload_fraction_extremes():
    topology = Topology.star(2)
    assert not any(s.cross_domain for s in generate_workload(Workload(4, 50, 0.0), topology, RESOURCES))
    every = generate_workload(Workload(4, 50, 1.0), topology, RESOURCES)
    assert all(s.target_domain == 'dom-0' for s in every)


def test_placement_uses_issuing_domains():
    placement = place_devices(5, Topology.star(2))
    assert sorted(set(placement.values())) == ['dom-1', 'dom-2']
    assert list(placement.values()).count('dom-1') == 3


def test_every_request_accounted_for():
    _, result = run(Topology.mesh(3), device_count=6, requests=40, fraction=0.5, q=3)
    assert len(result.outcomes) == 40
    assert [o.request_id for o in result.outcomes] == list(range(40))
    assert sum(result.outcome_counts().values()) == 40


def test_single_slot_runs_requests_back_to_back():
    _, result = run(Topology.star(1), device_count=3, requests=12, q=1)
    ordered = sorted(result.outcomes, key=lambda o: o.issued_ms)
    for previous, current in zip(ordered, ordered[1:]):
        assert current.issued_ms >= previous.completed_ms
    intra = [s for s in result.samples if s.phase == Phase.INTRA_AUTHORIZATION]
    assert len(intra) == 12
    assert all(s.ms == pytest.approx(INTRA_SERVICE) for s in intra)


def test_parallel_slots_queue_at_the_domain():
    _, result = run(Topology.star(1), device_count=4, requests=16, q=4)
    intra = sorted(s.ms for s in result.samples if s.phase == Phase.INTRA_AUTHORIZATION)
    assert intra[0] == pytest.approx(INTRA_SERVICE)
    assert intra[-1] > INTRA_SERVICE


def test_one_request_in_flight_per_device():
    _, result = run(Topology.mesh(2), device_count=2, requests=20, q=8)
    by_device = {}
    for outcome in result.outcomes:
        by_device.setdefault(outcome.device_id, []).append(outcome)
    for outcomes in by_device.values():
        outcomes.sort(key=lambda o: o.issued_ms)
        for previous, current in zip(outcomes, outcomes[1:]):
            assert current.issued_ms >= previous.completed_ms


def test_cross_domain_phase_latencies():
    _, result = run(Topology.star(1), device_count=1, requests=5, fraction=1.0, q=1)
    sharing = [s.ms for s in result.samples if s.phase == Phase.DATA_SHARING]
    full = [s.ms for s in result.samples if s.phase == Phase.FULL_PREAUTHORIZATION]
    assert len(sharing) == len(full) == 5
    assert all(ms == pytest.approx(SEAL_SERVICE + 10.0) for ms in sharing)
    assert all(ms == pytest.approx(SEAL_SERVICE + 10.0 + PREAUTH_SERVICE + 10.0) for ms in full)
    verifications = [s for s in result.samples if s.phase == Phase.TOKEN_VERIFICATION]
    granted = [o for o in result.outcomes if o.outcome == 'grant']
    assert len(verifications) >= len(granted)


def test_tokens_not_presented_when_disabled():
    settings = SimulationSettings(present_tokens=False)
    sim, result = run(Topology.star(2), device_count=2, requests=6, fraction=1.0, q=1, settings=settings)
    assert not [s for s in result.samples if s.phase == Phase.TOKEN_VERIFICATION]
    assert sim.moves == 0


def test_slow_requests_time_out():
    settings = SimulationSettings(timeout_ms=20.0)
    _, result = run(Topology.star(1), device_count=2, requests=6, fraction=1.0, q=1, settings=settings)
    assert result.outcome_counts()['timeout'] == 6
    assert all(o.reason == 'timeout' for o in result.outcomes)
    assert result.throughput.completed == 0
    assert result.throughput.rate_rps == 0.0


def test_move_device_checks_location_and_links():
    sim, placement = build_sim(Topology.star(2), device_count=2)
    device_id = sorted(placement)[0]
    home = placement[device_id]
    with pytest.raises(NotNeighbors):
        sim.move_device(device_id, home, 'dom-2' if home == 'dom-1' else 'dom-1')
    with pytest.raises(InvariantViolation):
        sim.move_device(device_id, 'dom-0', home)
    sim.move_device(device_id, home, 'dom-0')
    assert sim.location[device_id] == 'dom-0'
    assert sim.moves == 1


def test_least_loaded_stays_near_home():
    settings = SimulationSettings(dispatch='least_loaded')
    topology = Topology.star(3)
    sim, result = run(topology, device_count=6, requests=60, q=6, settings=settings)
    assert len(result.outcomes) == 60
    for device_id, location in sim.location.items():
        home = sim.devices[device_id].home_domain
        assert location in {home, *topology.neighbors(home)}


def test_counter_totals_collected_per_label():
    collector = CounterCollector()
    topology = Topology.star(1)
    sim, placement = build_sim(topology, device_count=2, collector=collector)
    specs = generate_workload(Workload(2, 4, 0.0, 1), topology, RESOURCES, placement)
    sim.run_workload(specs, 1)
    registration = collector.totals['total:registration']
    assert (registration.exp, registration.h, registration.sig) == (4, 2, 2)
    intra = collector.totals['total:intra_domain']
    assert (intra.exp, intra.h, intra.i, intra.cp) == (4, 4, 8, 4)


def trained_sim(topology, device_count, settings=None, rounds=2):
    arch = Architecture()
    sim, placement = build_sim(topology, device_count=device_count, settings=settings)
    partition = build_partition(topology.domains, 12, 5, 2, seed=0)
    for domain_id in topology.domains:
        sim.domains[domain_id].cam.ingest_many(partition.train_records[domain_id])
    trainers = build_trainers(sim.domains, partition, TrainingHyperparams(rounds=rounds), arch, 0)
    sim.attach_trainers(trainers)
    return sim, placement, trainers


def test_pretraining_runs_rounds_on_the_clock():
    topology = Topology.mesh(3)
    sim, placement, trainers = trained_sim(topology, 3)
    end = sim.pretrain(2)
    assert end >= 2 * 100.0
    for domain_id, trainer in trainers.items():
        assert trainer.round == 2
        assert sim.domains[domain_id].model is trainer.model
    rounds = [e for e in sim.queue.log if e['kind'] == 'message_arrival' and e['type'] == 'round']
    assert len(rounds) == 3 * 2 * 3
    specs = generate_workload(Workload(3, 6), topology, RESOURCES, placement)
    result = sim.run_workload(specs, 1)
    assert result.workload_start_ms == end
    # the workload ends before the first online round is due
    assert {r.round for r in result.dfl_history} == {1, 2}


@pytest.mark.parametrize('online', [True, False])
def test_rounds_keep_running_while_requests_are_outstanding(online):
    topology = Topology.mesh(3)
    sim, placement, trainers = trained_sim(topology, 3, SimulationSettings(train_during_workload=online))
    sim.pretrain(2)
    specs = generate_workload(Workload(3, 60, 1.0, 1), topology, RESOURCES, placement)
    result = sim.run_workload(specs, 1)
    online_rounds = max(r.round for r in result.dfl_history) - 2
    if not online:
        assert online_rounds == 0
        return
    span = (result.end_ms - result.workload_start_ms) / 100.0
    assert span > 5
    assert span - 1 <= online_rounds <= span + 1
    assert all(trainer.round == online_rounds + 2 for trainer in trainers.values())
    ticks = [e for e in sim.queue.log if e['kind'] == 'round_tick']
    assert max(e['t'] for e in ticks) <= result.end_ms + 100.0


def test_round_service_charges_each_merged_update():
    topology = Topology.star(3)
    sim, _, _ = trained_sim(topology, 3, SimulationSettings(cost_model=CostModel(round_ms=5.0, aggregate_ms=3.0)))
    sim.pretrain(2)
    # round 2: the hub merges three leaf updates, each leaf merges one
    hub = sim.actors['dom-0']
    leaf = sim.actors['dom-1']
    assert hub.busy_until - 200.0 == pytest.approx(5.0 + 3 * 3.0)
    assert leaf.busy_until - 200.0 == pytest.approx(5.0 + 3.0)


@pytest.mark.parametrize('scope,peak', [('global', 1), ('per_domain', 4)])
def test_parallelism_scope(scope, peak):
    settings = SimulationSettings(parallelism_scope=scope)
    _, result = run(Topology.star(4), device_count=8, requests=32, fraction=1.0, q=1, settings=settings)
    edges = sorted([(o.issued_ms, 1) for o in result.outcomes] + [(o.completed_ms, -1) for o in result.outcomes])
    current = highest = 0
    for _, step in edges:
        current += step
        highest = max(highest, current)
    assert highest == peak


def test_access_latency_paid_on_issue_and_completion():
    settings = SimulationSettings(access_latency_ms=2.5)
    _, result = run(Topology.star(1), device_count=1, requests=4, q=1, settings=settings)
    ordered = sorted(result.outcomes, key=lambda o: o.request_id)
    assert ordered[0].issued_ms == pytest.approx(2.5)
    for previous, current in zip(ordered, ordered[1:]):
        assert current.issued_ms == pytest.approx(previous.completed_ms + 2.5)
    assert all(o.completed_ms - o.issued_ms == pytest.approx(INTRA_SERVICE + 2.5) for o in ordered)


def test_same_config_same_state_hash():
    first, _, n, q = run_cell(small_scenario())
    second, _, _, _ = run_cell(small_scenario())
    assert (n, q) == (3, 2)
    assert first.state_hash == second.state_hash
    assert [o.to_dict() for o in first.outcomes] == [o.to_dict() for o in second.outcomes]
    assert [(s.request_id, s.phase, s.ms) for s in first.samples] == [
        (s.request_id, s.phase, s.ms) for s in second.samples]


def test_trace_lines_are_json_without_message_bodies():
    stream = io.StringIO()
    run_cell(small_scenario(), trace=stream)
    lines = stream.getvalue().splitlines()
    assert lines
    for line in lines:
        entry = json.loads(line)
        assert {'t', 'seq', 'kind'} <= set(entry)
        assert not any(key.startswith('_') for key in entry)
