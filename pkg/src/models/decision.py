from dataclasses import dataclass, field


@dataclass(frozen=True)
class AuthorizationDecision:
    allow: bool
    scope: frozenset = field(default_factory=frozenset)
    time_range: tuple = (0, 0)
    intention: str = ''
    reason: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'scope', frozenset(self.scope))
        if not self.allow and self.scope:
            raise ValueError("a denial cannot carry a scope")
        if self.allow and not self.time_range[0] < self.time_range[1]:
            raise ValueError("time range must be non-empty when access is allowed")

    def to_dict(self):
        return {
            'allow': self.allow,
            'scope': sorted(self.scope),
            'time_range': list(self.time_range),
            'intention': self.intention,
            'reason': self.reason,
        }
