from dataclasses import dataclass
from enum import Enum

from src.models.certificate import Certificate

MAX_INTENTION_BYTES = 256


class AccessLevel(str, Enum):
    READ = 'read'
    WRITE = 'write'
    ADMIN = 'admin'

    @property
    def rank(self):
        return _LEVEL_RANK[self]


_LEVEL_RANK = {AccessLevel.READ: 0, AccessLevel.WRITE: 1, AccessLevel.ADMIN: 2}


@dataclass(frozen=True)
class AccessRequest:
    """R = (Cert, ID, target domain, resource, access level, access intention)."""
    certificate: Certificate
    device_id: str
    target_domain: str
    resource: str
    access_level: AccessLevel
    access_intention: str

    def __post_init__(self):
        if not isinstance(self.access_level, AccessLevel):
            object.__setattr__(self, 'access_level', AccessLevel(self.access_level))
        for name in ('device_id', 'target_domain', 'resource', 'access_intention'):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if self.device_id != self.certificate.device_id:
            raise ValueError("device_id does not match certificate")
        if len(self.access_intention.encode('utf-8')) > MAX_INTENTION_BYTES:
            raise ValueError(f"access_intention exceeds {MAX_INTENTION_BYTES} bytes")

    def to_dict(self):
        return {
            'certificate': self.certificate.to_dict(),
            'device_id': self.device_id,
            'target_domain': self.target_domain,
            'resource': self.resource,
            'access_level': self.access_level.value,
            'access_intention': self.access_intention,
        }

    @classmethod
    def from_json(cls, json_data):
        return cls(
            certificate=Certificate.from_json(json_data['certificate']),
            device_id=json_data.get('device_id'),
            target_domain=json_data.get('target_domain'),
            resource=json_data.get('resource'),
            access_level=AccessLevel(json_data.get('access_level')),
            access_intention=json_data.get('access_intention'),
        )
