import random
from dataclasses import dataclass, asdict

from src.dfl.data import device_ids
from src.models.request import AccessLevel

INTENTIONS = {
    AccessLevel.READ: 'read {resource}',
    AccessLevel.WRITE: 'update {resource}',
    AccessLevel.ADMIN: 'administer {resource}',
}


@dataclass(frozen=True)
class Workload:
    device_count: int = 10
    total_requests: int = 1000
    cross_domain_fraction: float = 0.0
    parallelism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.device_count < 1:
            raise ValueError("device_count must be >= 1")
        if self.total_requests < 0:
            raise ValueError("total_requests must be >= 0")
        if not 0 <= self.cross_domain_fraction <= 1:
            raise ValueError("cross_domain_fraction must be in [0, 1]")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RequestSpec:
    request_id: int
    device_id: str
    home_domain: str
    target_domain: str
    resource: str
    access_level: AccessLevel
    intention: str

    @property
    def cross_domain(self):
        return self.target_domain != self.home_domain


def place_devices(device_count, topology):
    """Round-robin devices over the topology's issuing domains."""
    homes = topology.issuing_domains()
    return {device_id: homes[k % len(homes)] for k, device_id in enumerate(device_ids(device_count))}


def generate_workload(workload, topology, resources, placement=None):
    """
    Request k goes to device k mod device_count, so per-device counts differ
    by at most one. Cross-domain targets are drawn uniformly from the
    device's neighbor domains; access levels never exceed the resource's
    ceiling.

    Returns:
        list of RequestSpec in issue order (the simulator enforces q)
    """
    rng = random.Random(workload.seed)
    placement = placement or place_devices(workload.device_count, topology)
    devices = sorted(placement)
    names = sorted(resources)
    specs = []
    for request_id in range(workload.total_requests):
        device_id = devices[request_id % len(devices)]
        home = placement[device_id]
        neighbors = topology.neighbors(home)
        target = home
        if neighbors and rng.random() < workload.cross_domain_fraction:
            target = rng.choice(neighbors)
        resource = rng.choice(names)
        ceiling = AccessLevel(resources[resource])
        level = rng.choice([lvl for lvl in AccessLevel if lvl.rank <= ceiling.rank])
        specs.append(RequestSpec(request_id, device_id, home, target, resource, level,
                                 INTENTIONS[level].format(resource=resource)))
    return specs
