from dataclasses import dataclass, field

from config.settings import LINK_LATENCY_MS
from src.exceptions import NotNeighbors

HUB = 'dom-0'
TOPOLOGY_KINDS = ('star', 'mesh', 'ring', 'explicit')


def _edge(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass
class Topology:
    """Domains on an undirected neighbor graph with a latency per edge."""
    domains: list
    edges: set = field(default_factory=set)
    latency_ms: dict = field(default_factory=dict)
    default_latency_ms: float = LINK_LATENCY_MS
    kind: str = 'explicit'

    def __post_init__(self):
        if len(set(self.domains)) != len(self.domains):
            raise ValueError("duplicate domain ids")
        self.edges = {_edge(a, b) for a, b in self.edges}
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on {a}")
            if a not in self.domains or b not in self.domains:
                raise ValueError(f"edge ({a}, {b}) references an unknown domain")
        self.latency_ms = {_edge(a, b): float(v) for (a, b), v in self.latency_ms.items()}
        if any(v < 0 for v in self.latency_ms.values()) or self.default_latency_ms < 0:
            raise ValueError("latency must be non-negative")

    def adjacent(self, a, b):
        return _edge(a, b) in self.edges

    def neighbors(self, domain_id):
        return sorted(b if a == domain_id else a for a, b in self.edges if domain_id in (a, b))

    def neighbor_map(self):
        return {d: self.neighbors(d) for d in self.domains}

    def latency(self, a, b):
        if not self.adjacent(a, b):
            raise NotNeighbors(f"{a} and {b} are not adjacent")
        return self.latency_ms.get(_edge(a, b), self.default_latency_ms)

    def issuing_domains(self):
        """Domains that host devices: the leaves of a star, every domain otherwise."""
        if self.kind == 'star':
            return [d for d in self.domains if d != HUB]
        return list(self.domains)

    @property
    def size_label(self):
        """The experiment's n: neighbor count for a star, domain count otherwise."""
        return len(self.domains) - 1 if self.kind == 'star' else len(self.domains)

    @classmethod
    def star(cls, neighbors, latency_ms=LINK_LATENCY_MS):
        domains = [f"dom-{k}" for k in range(neighbors + 1)]
        return cls(domains, {(HUB, d) for d in domains[1:]}, default_latency_ms=latency_ms, kind='star')

    @classmethod
    def mesh(cls, count, latency_ms=LINK_LATENCY_MS):
        domains = [f"dom-{k}" for k in range(count)]
        edges = {(a, b) for i, a in enumerate(domains) for b in domains[i + 1:]}
        return cls(domains, edges, default_latency_ms=latency_ms, kind='mesh')

    @classmethod
    def ring(cls, count, latency_ms=LINK_LATENCY_MS):
        domains = [f"dom-{k}" for k in range(count)]
        edges = {(domains[k], domains[(k + 1) % count]) for k in range(count)} if count > 1 else set()
        edges = {e for e in edges if e[0] != e[1]}
        return cls(domains, edges, default_latency_ms=latency_ms, kind='ring')
