import logging

from src.crypto.suite import derive_shared_key
from src.exceptions import AuthenticationFailure, ChannelFailure, WireFormatError
from src.protocol.wire import MSG_REQUEST, deserialize_request, open_sealed, seal, serialize_request

logger = logging.getLogger(__name__)


def establish_channel(domain_a_keys, domain_b_keys):
    """Key agreement between two gateways; returns (key held by a, key held by b)."""
    key_a = derive_shared_key(domain_a_keys.private_key, domain_b_keys.public_key)
    key_b = derive_shared_key(domain_b_keys.private_key, domain_a_keys.public_key)
    logger.debug("channel established, key %s", key_a.fingerprint())
    return key_a, key_b


def seal_request(channel_key, request, nonce=None):
    """Source side: serialize and encrypt an access request."""
    return seal(channel_key, MSG_REQUEST, serialize_request(request), nonce=nonce)


def open_request(channel_key, envelope):
    """Target side: decrypt and deserialize; any failure is a ChannelFailure."""
    try:
        return deserialize_request(open_sealed(channel_key, envelope, MSG_REQUEST))
    except (AuthenticationFailure, WireFormatError) as e:
        raise ChannelFailure(str(e)) from e
