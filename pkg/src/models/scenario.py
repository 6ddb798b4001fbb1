"""
Scenario configuration: one JSON document describing the topology, workload,
DFL pretraining, zero-trust policy, cost model, optional sweep grid and
baseline latency stand-ins.

Every section rejects unknown keys with the dotted path of the offending key;
scenario files are also checked against scenarios/schema.json.
`ScenarioConfig.from_json(c.to_dict()) == c` for every valid config.
"""

import itertools
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from jsonschema import Draft202012Validator

from config.settings import (
    DIRICHLET_ALPHA, LINK_LATENCY_MS, LINK_RATE_KBPS, REQUEST_TIMEOUT_MS, RESOURCES, ROUND_INTERVAL_MS,
    TOKEN_TTL_MS, TRUST_THRESHOLD)
from src.dfl.engine import TrainingHyperparams
from src.exceptions import ConfigError
from src.metrics.cost import CostModel
from src.models.request import AccessLevel
from src.sim.simulation import DISPATCH_MODES, PARALLELISM_SCOPES
from src.sim.topology import TOPOLOGY_KINDS, Topology
from src.utils.json_handler import load_json_config
from src.zta.trust import RULE_NAMES, TrustRules

SWEEP_AXES = ('neighbors', 'domains', 'parallelism', 'devices')
SCHEMA_PATH = Path(__file__).resolve().parents[2] / 'scenarios' / 'schema.json'


def _check_keys(data, allowed, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key '{path + '.' if path else ''}{key}'")


def _build(path, factory, *args, **kwargs):
    """Call a constructor, reporting validation errors under `path`."""
    try:
        return factory(*args, **kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


@dataclass(frozen=True)
class TopologyConfig:
    kind: str = 'star'
    neighbors: int = 2
    domains: tuple = ()
    edges: tuple = ()
    latency_ms: float = LINK_LATENCY_MS
    edge_latency: tuple = ()

    KEYS = ('kind', 'neighbors', 'domains', 'edges', 'latency_ms', 'edge_latency')

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise ValueError(f"kind must be one of {TOPOLOGY_KINDS}")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative")
        if self.kind == 'star' and self.neighbors < 1:
            raise ValueError("a star needs at least one neighbor")

    def build(self, neighbors=None, domains=None):
        """Topology for one sweep cell; `neighbors` and `domains` override the configured size."""
        if self.kind == 'star':
            return Topology.star(neighbors or self.neighbors, self.latency_ms)
        if self.kind in ('mesh', 'ring'):
            count = domains or (self.domains[0] if self.domains else 1)
            factory = Topology.mesh if self.kind == 'mesh' else Topology.ring
            return factory(count, self.latency_ms)
        latency = {(a, b): ms for a, b, ms in self.edge_latency}
        return Topology(list(self.domains), set(tuple(e) for e in self.edges), latency,
                        default_latency_ms=self.latency_ms)

    def to_dict(self):
        sized = self.kind in ('mesh', 'ring')
        return {
            'kind': self.kind,
            'neighbors': self.neighbors,
            'domains': self.domains[0] if sized else list(self.domains),
            'edges': [list(e) for e in self.edges],
            'latency_ms': self.latency_ms,
            'edge_latency': [list(e) for e in self.edge_latency],
        }

    @classmethod
    def from_json(cls, json_data, path='topology'):
        _check_keys(json_data, cls.KEYS, path)
        kind = json_data.get('kind', 'star')
        domains = json_data.get('domains', ())
        if kind in ('mesh', 'ring'):
            domains = (int(domains),) if domains != () else (1,)
        else:
            domains = tuple(domains)
        config = _build(
            path, cls,
            kind=kind,
            neighbors=int(json_data.get('neighbors', 2)),
            domains=domains,
            edges=tuple(tuple(e) for e in json_data.get('edges', ())),
            latency_ms=float(json_data.get('latency_ms', LINK_LATENCY_MS)),
            edge_latency=tuple((a, b, float(ms)) for a, b, ms in json_data.get('edge_latency', ())),
        )
        _build(path, config.build)
        return config


@dataclass(frozen=True)
class WorkloadConfig:
    devices: int = 10
    requests: int = 1000
    parallelism: int = 1
    cross_domain_fraction: float = 0.0
    dispatch: str = 'home'
    present_tokens: bool = True
    timeout_ms: float = REQUEST_TIMEOUT_MS
    link_rate_kbps: float = LINK_RATE_KBPS
    parallelism_scope: str = 'global'
    access_latency_ms: float = 0.0

    def __post_init__(self):
        if self.devices < 1 or self.requests < 0 or self.parallelism < 1:
            raise ValueError("devices and parallelism must be >= 1, requests >= 0")
        if self.parallelism_scope not in PARALLELISM_SCOPES:
            raise ValueError(f"parallelism_scope must be one of {PARALLELISM_SCOPES}")
        if not 0 <= self.cross_domain_fraction <= 1:
            raise ValueError("cross_domain_fraction must be in [0, 1]")
        if self.dispatch not in DISPATCH_MODES:
            raise ValueError(f"dispatch must be one of {DISPATCH_MODES}")
        if self.timeout_ms <= 0 or self.link_rate_kbps < 0 or self.access_latency_ms < 0:
            raise ValueError("timeout_ms must be positive, link_rate_kbps and access_latency_ms non-negative")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, json_data, path='workload'):
        _check_keys(json_data, [f.name for f in fields(cls)], path)
        return _build(path, cls, **json_data)


@dataclass(frozen=True)
class DflConfig:
    hyperparams: TrainingHyperparams = field(default_factory=TrainingHyperparams)
    data_seed: int = 0
    dirichlet_alpha: float = DIRICHLET_ALPHA
    devices: int = 60
    records_per_device: int = 20
    test_records_per_device: int = 5
    round_interval_ms: float = ROUND_INTERVAL_MS
    train_during_workload: bool = True

    def __post_init__(self):
        if self.dirichlet_alpha <= 0:
            raise ValueError("dirichlet_alpha must be positive")
        if self.devices < 1 or self.records_per_device < 1 or self.test_records_per_device < 1:
            raise ValueError("device and record counts must be >= 1")
        if self.round_interval_ms <= 0:
            raise ValueError("round_interval_ms must be positive")

    def to_dict(self):
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'hyperparams'}
        data['hyperparams'] = self.hyperparams.to_dict()
        return data

    @classmethod
    def from_json(cls, json_data, path='dfl'):
        _check_keys(json_data, [f.name for f in fields(cls)], path)
        raw_hp = json_data.get('hyperparams', {})
        _check_keys(raw_hp, [f.name for f in fields(TrainingHyperparams)], f"{path}.hyperparams")
        hyperparams = _build(f"{path}.hyperparams", TrainingHyperparams.from_json, raw_hp)
        rest = {k: v for k, v in json_data.items() if k != 'hyperparams'}
        return _build(path, cls, hyperparams=hyperparams, **rest)


@dataclass(frozen=True)
class ZtaConfig:
    trust_rules: TrustRules = field(default_factory=TrustRules)
    threshold: float = TRUST_THRESHOLD
    token_ttl_ms: int = TOKEN_TTL_MS
    resources: dict = field(default_factory=lambda: dict(RESOURCES))

    RULE_KEYS = ('weights', 'time_window', 'access_level_risk', 'anomalous_classes', 'confidence_target', 'floor')

    def __post_init__(self):
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must be in [0, 1]")
        if self.token_ttl_ms < 0:
            raise ValueError("token_ttl_ms must be non-negative")
        for level in self.resources.values():
            AccessLevel(level)

    def to_dict(self):
        return {
            'trust_rules': self.trust_rules.to_dict(),
            'threshold': self.threshold,
            'token_ttl_ms': self.token_ttl_ms,
            'resources': dict(self.resources),
        }

    @classmethod
    def from_json(cls, json_data, path='zta'):
        _check_keys(json_data, ('trust_rules', 'threshold', 'token_ttl_ms', 'resources'), path)
        raw_rules = json_data.get('trust_rules', {})
        _check_keys(raw_rules, cls.RULE_KEYS, f"{path}.trust_rules")
        _check_keys(raw_rules.get('weights', {}), RULE_NAMES, f"{path}.trust_rules.weights")
        rules = _build(f"{path}.trust_rules", TrustRules.from_json, raw_rules)
        return _build(
            path, cls,
            trust_rules=rules,
            threshold=float(json_data.get('threshold', TRUST_THRESHOLD)),
            token_ttl_ms=int(json_data.get('token_ttl_ms', TOKEN_TTL_MS)),
            resources=dict(json_data.get('resources', RESOURCES)),
        )


@dataclass(frozen=True)
class SweepConfig:
    neighbors: tuple = ()
    domains: tuple = ()
    parallelism: tuple = ()
    devices: tuple = ()

    def __post_init__(self):
        for axis in SWEEP_AXES:
            if any(int(v) < 1 for v in getattr(self, axis)):
                raise ValueError(f"sweep.{axis} values must be >= 1")

    def cells(self):
        """Grid cells in axis order; [{}] when nothing is swept."""
        axes = [(axis, getattr(self, axis)) for axis in SWEEP_AXES if getattr(self, axis)]
        if not axes:
            return [{}]
        names = [name for name, _ in axes]
        return [dict(zip(names, values)) for values in itertools.product(*(v for _, v in axes))]

    def to_dict(self):
        return {axis: list(getattr(self, axis)) for axis in SWEEP_AXES if getattr(self, axis)}

    @classmethod
    def from_json(cls, json_data, path='sweep'):
        _check_keys(json_data, SWEEP_AXES, path)
        return _build(path, cls, **{axis: tuple(int(v) for v in json_data.get(axis, ())) for axis in SWEEP_AXES})


@dataclass(frozen=True)
class BaselineConfig:
    """
    Latency stand-in for a comparison scheme: fixed extra service at the
    source before the request leaves, and at the target before it answers,
    the latter growing with the number of domains that must confirm.
    """
    name: str
    share_ms: float = 0.0
    confirm_ms: float = 0.0
    per_domain_ms: float = 0.0

    def __post_init__(self):
        if not self.name or not self.name.replace('_', '').isalnum():
            raise ValueError("name must be non-empty letters, digits and underscores")
        if min(self.share_ms, self.confirm_ms, self.per_domain_ms) < 0:
            raise ValueError("baseline times must be non-negative")

    def preauth_extra_ms(self, domain_count):
        return self.confirm_ms + self.per_domain_ms * domain_count

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, json_data, path='baselines'):
        _check_keys(json_data, [f.name for f in fields(cls)], path)
        if 'name' not in json_data:
            raise ConfigError(f"{path}: missing 'name'")
        return _build(path, cls, name=str(json_data['name']),
                      **{k: float(v) for k, v in json_data.items() if k != 'name'})


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = 'scenario'
    seed: int = 0
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    dfl: DflConfig = field(default_factory=DflConfig)
    zta: ZtaConfig = field(default_factory=ZtaConfig)
    cost_model: CostModel = field(default_factory=CostModel)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    baselines: tuple = ()

    KEYS = ('name', 'seed', 'topology', 'workload', 'dfl', 'zta', 'cost_model', 'sweep', 'baselines')

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def to_dict(self):
        return {
            'name': self.name,
            'seed': self.seed,
            'topology': self.topology.to_dict(),
            'workload': self.workload.to_dict(),
            'dfl': self.dfl.to_dict(),
            'zta': self.zta.to_dict(),
            'cost_model': self.cost_model.to_dict(),
            'sweep': self.sweep.to_dict(),
            'baselines': [baseline.to_dict() for baseline in self.baselines],
        }

    @classmethod
    def from_json(cls, json_data):
        _check_keys(json_data, cls.KEYS, '')
        raw_cost = json_data.get('cost_model', {})
        _check_keys(raw_cost, [f.name for f in fields(CostModel)], 'cost_model')
        seed = json_data.get('seed', 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed: expected an integer")
        raw_baselines = json_data.get('baselines', [])
        if not isinstance(raw_baselines, list):
            raise ConfigError("baselines: expected a list")
        baselines = tuple(BaselineConfig.from_json(raw, f"baselines.{k}") for k, raw in enumerate(raw_baselines))
        if len({b.name for b in baselines}) != len(baselines):
            raise ConfigError("baselines: names must be unique")
        return cls(
            name=str(json_data.get('name', 'scenario')),
            seed=seed,
            topology=TopologyConfig.from_json(json_data.get('topology', {})),
            workload=WorkloadConfig.from_json(json_data.get('workload', {})),
            dfl=DflConfig.from_json(json_data.get('dfl', {})),
            zta=ZtaConfig.from_json(json_data.get('zta', {})),
            cost_model=_build('cost_model', CostModel.from_json, raw_cost),
            sweep=SweepConfig.from_json(json_data.get('sweep', {})),
            baselines=baselines,
        )


def validate_against_schema(json_data, schema_path=SCHEMA_PATH):
    """
    Check a scenario document against the bundled JSON Schema.

    Raises:
        ConfigError: naming the dotted path of the first violation
    """
    validator = Draft202012Validator(load_json_config(schema_path))
    errors = sorted(validator.iter_errors(json_data), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        error = errors[0]
        where = '.'.join(str(p) for p in error.absolute_path) or 'config'
        raise ConfigError(f"{where}: {error.message}")


def load_scenario(file_path):
    """Read and validate a scenario file. Raises ConfigError."""
    json_data = load_json_config(file_path)
    config = ScenarioConfig.from_json(json_data)
    validate_against_schema(json_data)
    return config
