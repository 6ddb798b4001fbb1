"""Error hierarchy shared by every ztmesh component."""


class ZtMeshError(Exception):
    """Base class for all ztmesh errors."""


# crypto
class InvalidPublicKey(ZtMeshError):
    """Public key bytes do not encode a valid curve point."""


class AuthenticationFailure(ZtMeshError):
    """AEAD tag check failed (tampered ciphertext or wrong key)."""


# control plane
class DuplicateId(ZtMeshError):
    """Device id already registered in this domain."""


class DimensionMismatch(ZtMeshError):
    """Context record does not match the configured model dimensions."""


# protocol
class ChannelFailure(ZtMeshError):
    """Inter-domain message could not be authenticated or decoded."""


class WireFormatError(ZtMeshError):
    """Byte string does not follow the documented wire framing."""


# dfl
class IndexOutOfRange(ZtMeshError):
    pass


class LengthMismatch(ZtMeshError):
    pass


class EmptyInput(ZtMeshError):
    pass


class NotNormalized(ZtMeshError):
    pass


class ShapeMismatch(ZtMeshError):
    pass


class NonFiniteGradient(ZtMeshError):
    pass


# simulation
class PastEvent(ZtMeshError):
    """Event scheduled before the current simulation clock."""


class NotNeighbors(ZtMeshError):
    """Domains are not adjacent in the topology."""


# metrics / cli
class UnbalancedScope(ZtMeshError):
    pass


class MissingInput(ZtMeshError):
    pass


class ConfigError(ZtMeshError):
    """Scenario configuration failed to parse or validate."""


class InvariantViolation(ZtMeshError):
    """A runtime invariant of the simulation was broken."""
