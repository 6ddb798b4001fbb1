from dataclasses import dataclass, field, replace
from enum import Enum

from src.utils.framing import pack_fields, unpack_fields

TOKEN_VERSION = 0x01


@dataclass(frozen=True)
class OneTimeToken:
    """Token = (ID, scope S, time range T, intention I, nonce r) + AM signature."""
    device_id: str
    scope: frozenset
    time_range: tuple
    intention: str
    nonce: bytes
    issuer_id: str = ''
    signature: bytes = field(default=b'', repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'scope', frozenset(self.scope))
        object.__setattr__(self, 'time_range', (int(self.time_range[0]), int(self.time_range[1])))

    def canonical_bytes(self):
        """The signed content; same framing as serialized requests."""
        return pack_fields(TOKEN_VERSION, [
            self.device_id,
            '\n'.join(sorted(self.scope)),
            str(self.time_range[0]),
            str(self.time_range[1]),
            self.intention,
            self.nonce,
            self.issuer_id,
        ])

    def with_signature(self, signature):
        return replace(self, signature=signature)

    def to_bytes(self):
        return pack_fields(TOKEN_VERSION, [self.canonical_bytes(), self.signature])

    @classmethod
    def from_bytes(cls, data):
        _, (body, signature) = unpack_fields(data, TOKEN_VERSION, 2)
        _, fields_ = unpack_fields(body, TOKEN_VERSION, 7)
        device_id, scope, start, end, intention, nonce, issuer = fields_
        scope_text = scope.decode('utf-8')
        return cls(
            device_id=device_id.decode('utf-8'),
            scope=frozenset(scope_text.split('\n')) if scope_text else frozenset(),
            time_range=(int(start), int(end)),
            intention=intention.decode('utf-8'),
            nonce=nonce,
            issuer_id=issuer.decode('utf-8'),
            signature=signature,
        )


class DenialReason(str, Enum):
    AUTHENTICATION = 'authentication'
    TRUST = 'trust'
    POLICY = 'policy'
    SIGNATURE = 'signature'
    EXPIRED = 'expired'
    SCOPE = 'scope'
    INTENTION = 'intention'
    REPLAY = 'replay'
    CHANNEL = 'channel'
    TIMEOUT = 'timeout'


@dataclass(frozen=True)
class Grant:
    device_id: str
    resource: str
    nonce: bytes = b''


@dataclass(frozen=True)
class Denial:
    reason: DenialReason
    detail: str = ''
    device_id: str = ''
    issuer_id: str = ''
    signature: bytes = field(default=b'', repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'reason', DenialReason(self.reason))

    def canonical_bytes(self):
        return pack_fields(TOKEN_VERSION, [self.reason.value, self.detail, self.device_id, self.issuer_id])

    def with_signature(self, signature):
        return replace(self, signature=signature)

    def to_bytes(self):
        return pack_fields(TOKEN_VERSION, [self.canonical_bytes(), self.signature])

    @classmethod
    def from_bytes(cls, data):
        _, (body, signature) = unpack_fields(data, TOKEN_VERSION, 2)
        _, (reason, detail, device_id, issuer) = unpack_fields(body, TOKEN_VERSION, 4)
        return cls(DenialReason(reason.decode('utf-8')), detail.decode('utf-8'),
                   device_id.decode('utf-8'), issuer.decode('utf-8'), signature)
