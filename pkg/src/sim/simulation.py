"""
Discrete-event simulation of a multi-domain deployment.

Each domain is a FIFO server: work arriving while it is busy waits, and the
service time of a unit of work is the cost model applied to the operation
counters it charged. Messages between domains travel over the topology's
links. DFL pretraining rounds run on the same clock before the access
workload starts and, unless disabled, keep ticking while it runs.
"""

import hashlib
import json
import logging
from collections import deque
from dataclasses import dataclass, field

from config.settings import LINK_RATE_KBPS, REQUEST_TIMEOUT_MS, ROUND_INTERVAL_MS
from src.crypto.suite import derive_shared_key
from src.dfl.codec import decode_round_message, encode_round_message
from src.dfl.engine import DomainTrainer
from src.dfl.mlp import init_model
from src.exceptions import ChannelFailure, InvariantViolation, WireFormatError
from src.metrics.cost import CostModel
from src.metrics.counters import Meter, diff, scope_counters, use_meter
from src.metrics.latency import LatencySample, Phase, ThroughputRecord
from src.models.token import Denial, DenialReason, OneTimeToken
from src.protocol.channel import seal_request
from src.protocol.preauth import process_preauthorization
from src.protocol.tokens import decode_token, encode_token, verify_token
from src.protocol.wire import MSG_DENIAL, MSG_TOKEN, decode_denial, encode_denial
from src.sim.events import EventKind, EventQueue

logger = logging.getLogger(__name__)

DISPATCH_MODES = ('home', 'least_loaded')
PARALLELISM_SCOPES = ('global', 'per_domain')
OUTCOMES = ('grant', 'denial', 'timeout')

LABEL_REGISTRATION = 'registration'
LABEL_INTRA = 'intra_domain'
LABEL_CROSS = 'cross_domain'
LABEL_VERIFICATION = 'token_verification'
LABEL_ROUND = 'dfl_round'


@dataclass(frozen=True)
class SimulationSettings:
    cost_model: CostModel = field(default_factory=CostModel)
    timeout_ms: float = REQUEST_TIMEOUT_MS
    link_rate_kbps: float = LINK_RATE_KBPS
    round_interval_ms: float = ROUND_INTERVAL_MS
    dispatch: str = 'home'
    present_tokens: bool = True
    parallelism_scope: str = 'global'
    train_during_workload: bool = True
    seal_extra_ms: float = 0.0
    preauth_extra_ms: float = 0.0
    access_latency_ms: float = 0.0

    def __post_init__(self):
        if self.dispatch not in DISPATCH_MODES:
            raise ValueError(f"dispatch must be one of {DISPATCH_MODES}")
        if self.parallelism_scope not in PARALLELISM_SCOPES:
            raise ValueError(f"parallelism_scope must be one of {PARALLELISM_SCOPES}")
        if min(self.seal_extra_ms, self.preauth_extra_ms, self.access_latency_ms) < 0:
            raise ValueError("extra service and access latency must be non-negative")
        if self.timeout_ms <= 0 or self.round_interval_ms <= 0:
            raise ValueError("timeout and round interval must be positive")
        if self.link_rate_kbps < 0:
            raise ValueError("link rate must be non-negative")


@dataclass(frozen=True)
class RequestOutcome:
    request_id: int
    device_id: str
    home_domain: str
    target_domain: str
    outcome: str
    reason: str
    issued_ms: float
    completed_ms: float

    def to_dict(self):
        return {
            'request_id': self.request_id, 'device_id': self.device_id, 'home_domain': self.home_domain,
            'target_domain': self.target_domain, 'outcome': self.outcome, 'reason': self.reason,
            'issued_ms': self.issued_ms, 'completed_ms': self.completed_ms,
        }


@dataclass
class SimulationResult:
    outcomes: list
    samples: list
    throughput: ThroughputRecord
    state_hash: str
    dfl_history: list
    workload_start_ms: float
    end_ms: float

    def outcome_counts(self):
        counts = {name: 0 for name in OUTCOMES}
        for outcome in self.outcomes:
            counts[outcome.outcome] += 1
        return counts


class DomainActor:
    """A domain's control plane seen as a single FIFO server."""

    def __init__(self, domain, cost_model, collector=None):
        self.domain = domain
        self.cost_model = cost_model
        self.collector = collector
        self.busy_until = 0.0
        self.served = 0
        self.trainer = None
        self.inbox = []

    def backlog(self, now):
        return max(0.0, self.busy_until - now)

    def serve(self, now, label, work, extra_ms=0.0):
        """
        Run `work` on this domain, metered under `label`.

        Returns:
            (result of work, completion time in ms)
        """
        start = max(now, self.busy_until)
        meter = Meter()
        with use_meter(meter):
            with scope_counters(label) as scope:
                result = work()
        counters = diff(scope)
        self.busy_until = start + self.cost_model.service_ms(counters) + extra_ms
        self.served += 1
        if self.collector is not None:
            self.collector.add(f"total:{label}", counters)
        return result, self.busy_until


class Simulation:
    def __init__(self, topology, domains, settings=None, collector=None, trace=None):
        """
        Args:
            topology: Topology
            domains: {domain_id: Domain}, one per topology domain
            settings: SimulationSettings
            collector: Optional CounterCollector receiving per-label totals
            trace: Optional text stream receiving one JSON object per processed event
        """
        missing = set(topology.domains) - set(domains)
        if missing:
            raise ValueError(f"no Domain for {sorted(missing)}")
        self.topology = topology
        self.domains = domains
        self.settings = settings or SimulationSettings()
        self.collector = collector
        self.queue = EventQueue()
        self.actors = {d: DomainActor(domains[d], self.settings.cost_model, collector) for d in topology.domains}
        self._trace = trace

        self.devices = {}
        self.location = {}
        self.samples = []
        self.outcomes = []
        self.moves = 0
        self.rounds = 0

        self._specs = {}
        self._pending = {}
        self._in_flight = {}
        self._busy_devices = set()
        self._issued_at = {}
        self._parallelism = 1
        self._workload_start = None

    # setup

    def _log_trace(self, event):
        if self._trace is not None:
            self._trace.write(json.dumps(event.to_dict(), sort_keys=True) + '\n')

    def enroll_devices(self, devices, placement):
        """
        Register every device with its home domain's AM. Registration is
        counted but happens before simulated time starts.

        Args:
            devices: {device_id: Device}
            placement: {device_id: home domain}
        """
        meter = Meter()
        with use_meter(meter):
            for device_id in sorted(devices):
                with scope_counters(LABEL_REGISTRATION) as scope:
                    devices[device_id].enroll(self.domains[placement[device_id]].am)
                if self.collector is not None:
                    self.collector.add(f"total:{LABEL_REGISTRATION}", diff(scope))
                self.devices[device_id] = devices[device_id]
                self.location[device_id] = placement[device_id]
        logger.info("enrolled %d devices over %d domains", len(devices), len(set(placement.values())))

    def attach_trainers(self, trainers):
        """{domain_id: DomainTrainer}; each domain's PE uses its trainer's model."""
        for domain_id, trainer in trainers.items():
            self.actors[domain_id].trainer = trainer
            self.domains[domain_id].attach_model(trainer.model)

    # network

    def send_cross_domain(self, src, dst, message, depart_ms=None, **meta):
        """
        Put `message` (bytes) on the link src -> dst.

        Returns:
            The scheduled message_arrival event

        Raises:
            NotNeighbors: src and dst share no link
        """
        depart = self.queue.clock if depart_ms is None else depart_ms
        latency = self.topology.latency(src, dst)
        serialization = 0.0
        if self.settings.link_rate_kbps > 0:
            serialization = len(message) * 8 / self.settings.link_rate_kbps
        return self.queue.at(
            depart + latency + serialization, EventKind.MESSAGE_ARRIVAL,
            src=src, dst=dst, size=len(message), sent_ms=depart, min_arrival_ms=depart + latency,
            _body=message, **meta,
        )

    def move_device(self, device_id, src, dst):
        """Relocate a device between adjacent domains."""
        if self.location.get(device_id) != src:
            raise InvariantViolation(f"{device_id} is not in {src}")
        self.topology.latency(src, dst)
        self.location[device_id] = dst
        self.moves += 1

    def _relocate(self, device_id, dst):
        """Move through the home domain when the current domain has no link to dst."""
        current = self.location[device_id]
        if current == dst:
            return
        if self.topology.adjacent(current, dst):
            self.move_device(device_id, current, dst)
            return
        home = self.devices[device_id].home_domain
        self.move_device(device_id, current, home)
        if home != dst:
            self.move_device(device_id, home, dst)

    def _least_loaded(self, device_id, now):
        current = self.location[device_id]
        home = self.devices[device_id].home_domain
        allowed = {home, *self.topology.neighbors(home)}
        candidates = [d for d in [current, *self.topology.neighbors(current)] if d in allowed]
        return min(candidates, key=lambda d: (self.actors[d].backlog(now), d != current, d))

    # DFL pretraining

    def _broadcast_round(self, domain_id, message, depart_ms):
        payload = encode_round_message(message)
        for neighbor in self.topology.neighbors(domain_id):
            if self.actors[neighbor].trainer is not None:
                self.send_cross_domain(domain_id, neighbor, payload, depart_ms, type='round', round=message.round)

    def pretrain(self, rounds):
        """
        Run `rounds` DFL rounds on the event clock: the initial exchange at the
        current time, then one round_tick per domain every round interval.
        """
        trained = sorted(d for d, actor in self.actors.items() if actor.trainer is not None)
        if rounds <= 0 or not trained:
            return self.queue.clock
        self.rounds = rounds
        start = self.queue.clock
        for domain_id in trained:
            self._broadcast_round(domain_id, self.actors[domain_id].trainer.outbound_message(), start)
            self.queue.at(start + self.settings.round_interval_ms, EventKind.ROUND_TICK,
                          domain=domain_id, round=1)
        self.queue.run_until(self._handle)
        logger.info("pretraining finished: %d rounds, clock %.1f ms", rounds, self.queue.clock)
        return self.queue.clock

    def _training_online(self):
        """True while workload requests are outstanding and rounds run alongside them."""
        return (self.settings.train_during_workload and self._workload_start is not None
                and len(self.outcomes) < len(self._specs))

    def _on_round_tick(self, event):
        domain_id = event.payload['domain']
        round_number = event.payload['round']
        if round_number > self.rounds and not self._training_online():
            return
        actor = self.actors[domain_id]
        messages, actor.inbox = actor.inbox, []
        message, done = actor.serve(event.time_ms, LABEL_ROUND, lambda: actor.trainer.run_round(messages),
                                    extra_ms=self.settings.cost_model.round_service_ms(len(messages)))
        self.domains[domain_id].attach_model(actor.trainer.model)
        self._broadcast_round(domain_id, message, done)
        if round_number < self.rounds or self._training_online():
            self.queue.at(event.time_ms + self.settings.round_interval_ms, EventKind.ROUND_TICK,
                          domain=domain_id, round=round_number + 1)

    # workload

    def run_workload(self, specs, parallelism=1):
        """
        Issue `specs` with at most `parallelism` requests in flight and one
        per device, and run until every request completes. The cap covers the
        whole deployment, or each home domain separately under the
        'per_domain' parallelism scope. Trained domains keep running rounds
        until the last request completes when train_during_workload is set.

        Returns:
            SimulationResult
        """
        self._parallelism = parallelism
        self._workload_start = self.queue.clock
        for spec in specs:
            self._specs[spec.request_id] = spec
            self._pending.setdefault(self._pool(spec), deque()).append(spec)
            self._in_flight.setdefault(self._pool(spec), 0)
        if self._training_online():
            for domain_id in sorted(d for d, actor in self.actors.items() if actor.trainer is not None):
                self.queue.at(self._workload_start + self.settings.round_interval_ms, EventKind.ROUND_TICK,
                              domain=domain_id, round=self.actors[domain_id].trainer.round + 1)
        for pool in sorted(self._pending):
            self._fill(pool, self._workload_start)
        self.queue.run_until(self._handle)
        self._check_conservation(len(specs))
        return self.result()

    def _pool(self, spec):
        return spec.home_domain if self.settings.parallelism_scope == 'per_domain' else '*'

    def _fill(self, pool, now):
        pending = self._pending[pool]
        while self._in_flight[pool] < self._parallelism:
            spec = next((s for s in pending if s.device_id not in self._busy_devices), None)
            if spec is None:
                return
            pending.remove(spec)
            self._in_flight[pool] += 1
            self._busy_devices.add(spec.device_id)
            # the request reaches its domain over the device's access link
            self.queue.at(now + self.settings.access_latency_ms, EventKind.REQUEST_ISSUED,
                          request_id=spec.request_id, device=spec.device_id,
                          domain=spec.home_domain, target=spec.target_domain)

    def _complete(self, spec, outcome, reason, done_ms):
        self.queue.at(done_ms + self.settings.access_latency_ms, EventKind.REQUEST_COMPLETED,
                      request_id=spec.request_id, device=spec.device_id,
                      domain=spec.home_domain, outcome=outcome, reason=reason)

    def _on_request_issued(self, event):
        spec = self._specs[event.payload['request_id']]
        now = event.time_ms
        self._issued_at[spec.request_id] = now
        device = self.devices[spec.device_id]
        if not spec.cross_domain:
            if self.settings.dispatch == 'least_loaded':
                self._relocate(spec.device_id, self._least_loaded(spec.device_id, now))
            serving = self.location[spec.device_id]
            domain = self.domains[serving]
            request = device.make_request(serving, spec.resource, spec.access_level, spec.intention)
            decision, done = self.actors[serving].serve(now, LABEL_INTRA, lambda: domain.handle_local(request, now))
            self.samples.append(LatencySample(spec.request_id, Phase.INTRA_AUTHORIZATION, now, done))
            self._complete(spec, 'grant' if decision.allow else 'denial', decision.reason, done)
            return

        source = self.domains[spec.home_domain]
        target = self.domains[spec.target_domain]
        request = device.make_request(spec.target_domain, spec.resource, spec.access_level, spec.intention)

        def seal():
            key = derive_shared_key(source.gateway_keys.private_key, target.gateway_keys.public_key)
            return seal_request(key, request, nonce=source.channel_nonce())

        envelope, done = self.actors[spec.home_domain].serve(
            now, LABEL_CROSS, seal, extra_ms=self.settings.seal_extra_ms)
        self.send_cross_domain(spec.home_domain, spec.target_domain, envelope, done,
                               type='request', request_id=spec.request_id)

    def _on_request_arrival(self, event):
        spec = self._specs[event.payload['request_id']]
        now = event.time_ms
        self.samples.append(LatencySample(spec.request_id, Phase.DATA_SHARING, self._issued_at[spec.request_id], now))
        source = self.domains[spec.home_domain]
        target = self.domains[spec.target_domain]
        envelope = event.payload['_body']

        def preauthorize():
            key = derive_shared_key(target.gateway_keys.private_key, source.gateway_keys.public_key)
            try:
                reply = process_preauthorization(target, envelope, key, now)
            except ChannelFailure as e:
                reply = Denial(DenialReason.CHANNEL, str(e), spec.device_id, target.domain_id)
            if isinstance(reply, OneTimeToken):
                return encode_token(reply)
            return encode_denial(reply)

        reply, done = self.actors[spec.target_domain].serve(
            now, LABEL_CROSS, preauthorize, extra_ms=self.settings.preauth_extra_ms)
        self.send_cross_domain(spec.target_domain, spec.home_domain, reply, done,
                               type='reply', request_id=spec.request_id)

    def _on_reply_arrival(self, event):
        spec = self._specs[event.payload['request_id']]
        now = event.time_ms
        self.samples.append(
            LatencySample(spec.request_id, Phase.FULL_PREAUTHORIZATION, self._issued_at[spec.request_id], now))
        body = event.payload['_body']
        if body[1] == MSG_DENIAL:
            denial = decode_denial(body)
            self._complete(spec, 'denial', denial.reason.value, now)
            return
        if body[1] != MSG_TOKEN:
            raise WireFormatError(f"unexpected reply type {body[1]:#04x}")
        token = decode_token(body)
        if not self.settings.present_tokens:
            self._complete(spec, 'grant', 'granted', now)
            return
        self._relocate(spec.device_id, spec.target_domain)
        travel = self.topology.latency(spec.home_domain, spec.target_domain)
        self.queue.at(now + travel, EventKind.TOKEN_PRESENTED, request_id=spec.request_id, device=spec.device_id,
                      domain=spec.target_domain, _token=token)

    def _on_token_presented(self, event):
        spec = self._specs[event.payload['request_id']]
        now = event.time_ms
        target = self.domains[spec.target_domain]
        device = self.devices[spec.device_id]
        request = device.make_request(spec.target_domain, spec.resource, spec.access_level, spec.intention)
        token = event.payload['_token']
        result, done = self.actors[spec.target_domain].serve(
            now, LABEL_VERIFICATION, lambda: verify_token(target.ledger, target.am.public_key, token, request, now))
        self.samples.append(LatencySample(spec.request_id, Phase.TOKEN_VERIFICATION, now, done))
        if isinstance(result, Denial):
            self._complete(spec, 'denial', result.reason.value, done)
        else:
            self._complete(spec, 'grant', 'granted', done)

    def _on_request_completed(self, event):
        spec = self._specs[event.payload['request_id']]
        issued = self._issued_at[spec.request_id]
        outcome, reason = event.payload['outcome'], event.payload['reason']
        if event.time_ms - issued > self.settings.timeout_ms:
            outcome, reason = 'timeout', DenialReason.TIMEOUT.value
        self.outcomes.append(RequestOutcome(spec.request_id, spec.device_id, spec.home_domain, spec.target_domain,
                                            outcome, reason, issued, event.time_ms))
        self._busy_devices.discard(spec.device_id)
        self._in_flight[self._pool(spec)] -= 1
        self._fill(self._pool(spec), event.time_ms)

    # dispatch

    def _handle(self, event):
        self._log_trace(event)
        kind = EventKind(event.kind)
        if kind == EventKind.MESSAGE_ARRIVAL:
            if event.time_ms + 1e-9 < event.payload['min_arrival_ms']:
                raise InvariantViolation(f"message arrived at {event.time_ms} before its link latency elapsed")
            message_type = event.payload['type']
            if message_type == 'round':
                actor = self.actors[event.payload['dst']]
                actor.inbox.append(decode_round_message(event.payload['_body'], actor.trainer.architecture))
            elif message_type == 'request':
                self._on_request_arrival(event)
            else:
                self._on_reply_arrival(event)
        elif kind == EventKind.REQUEST_ISSUED:
            self._on_request_issued(event)
        elif kind == EventKind.TOKEN_PRESENTED:
            self._on_token_presented(event)
        elif kind == EventKind.ROUND_TICK:
            self._on_round_tick(event)
        else:
            self._on_request_completed(event)

    def _check_conservation(self, expected):
        counts = {name: 0 for name in OUTCOMES}
        for outcome in self.outcomes:
            counts[outcome.outcome] += 1
        if sum(counts.values()) != expected or len({o.request_id for o in self.outcomes}) != expected:
            raise InvariantViolation(f"issued {expected} requests but accounted for {counts}")

    # results

    def state_hash(self):
        digest = hashlib.sha256()
        for entry in self.queue.log:
            digest.update(json.dumps(entry, sort_keys=True).encode('utf-8'))
            digest.update(b'\n')
        return digest.hexdigest()

    def result(self):
        start = self._workload_start if self._workload_start is not None else self.queue.clock
        end = max((o.completed_ms for o in self.outcomes), default=start)
        completed = sum(1 for o in self.outcomes if o.outcome != 'timeout')
        devices = len({o.device_id for o in self.outcomes}) or len(self.devices)
        history = []
        for domain_id in sorted(self.actors):
            trainer = self.actors[domain_id].trainer
            if trainer is not None:
                history.extend(trainer.history)
        history.sort(key=lambda r: (r.round, r.domain))
        return SimulationResult(
            outcomes=sorted(self.outcomes, key=lambda o: o.request_id),
            samples=list(self.samples),
            throughput=ThroughputRecord(self.topology.size_label, devices, (end - start) / 1000.0, completed),
            state_hash=self.state_hash(),
            dfl_history=history,
            workload_start_ms=start,
            end_ms=end,
        )


def build_trainers(domains, partition, hyperparams, architecture, seed):
    """One DomainTrainer per domain holding data, seeded seed + index."""
    trainers = {}
    for k, domain_id in enumerate(sorted(domains)):
        X, y = domains[domain_id].storage.dataset_arrays()
        if len(X) == 0:
            continue
        trainers[domain_id] = DomainTrainer(domain_id, X, y, hyperparams, architecture, seed + k,
                                            (partition.test_X, partition.test_y))
    return trainers


def untrained_models(domains, architecture, seed):
    for k, domain_id in enumerate(sorted(domains)):
        domains[domain_id].attach_model(init_model(architecture, seed + k))
