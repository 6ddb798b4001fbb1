"""
Byte formats that cross a domain boundary. See docs/wire.md.

Serialized request (framing version 0x01, 6 fields, in order):
    certificate (hex of the framed certificate), device_id, target_domain,
    resource, access_level, access_intention

Message header (2 bytes): version 0x01, message type
    0x01 request    sealed: header || 12-byte nonce || AES-GCM ciphertext+tag,
                    the header bound as associated data
    0x02 round      plain:  header || framed round message
    0x03 token      plain:  header || framed token
    0x04 denial     plain:  header || framed signed denial
"""

import struct

from src.crypto.suite import decrypt, encrypt
from src.exceptions import WireFormatError
from src.models.certificate import Certificate
from src.models.request import AccessRequest
from src.models.token import Denial
from src.utils.framing import pack_fields, unpack_fields

WIRE_VERSION = 0x01
MSG_REQUEST = 0x01
MSG_ROUND = 0x02
MSG_TOKEN = 0x03
MSG_DENIAL = 0x04
MESSAGE_TYPES = (MSG_REQUEST, MSG_ROUND, MSG_TOKEN, MSG_DENIAL)

REQUEST_FIELDS = ('certificate', 'device_id', 'target_domain', 'resource', 'access_level', 'access_intention')


def serialize_request(request):
    return pack_fields(WIRE_VERSION, [
        request.certificate.to_bytes().hex(),
        request.device_id,
        request.target_domain,
        request.resource,
        request.access_level.value,
        request.access_intention,
    ])


def deserialize_request(data):
    _, values = unpack_fields(data, WIRE_VERSION, len(REQUEST_FIELDS))
    try:
        text = [v.decode('utf-8') for v in values]
        certificate = Certificate.from_bytes(bytes.fromhex(text[0]))
        return AccessRequest(certificate, *text[1:])
    except (UnicodeDecodeError, ValueError) as e:
        raise WireFormatError(f"malformed request: {e}") from e


def header(msg_type):
    if msg_type not in MESSAGE_TYPES:
        raise WireFormatError(f"unknown message type 0x{msg_type:02x}")
    return struct.pack('>BB', WIRE_VERSION, msg_type)


def _check_header(data, expected_type):
    if len(data) < 2:
        raise WireFormatError("truncated message header")
    version, msg_type = data[0], data[1]
    if version != WIRE_VERSION:
        raise WireFormatError(f"unsupported wire version 0x{version:02x}")
    if msg_type != expected_type:
        raise WireFormatError(f"expected message type 0x{expected_type:02x}, got 0x{msg_type:02x}")


def seal(key, msg_type, plaintext, nonce=None):
    head = header(msg_type)
    return head + encrypt(key, plaintext, nonce=nonce, associated_data=head)


def open_sealed(key, data, expected_type):
    """Raises WireFormatError on a bad header, AuthenticationFailure on a bad tag."""
    _check_header(data, expected_type)
    return decrypt(key, data[2:], associated_data=bytes(data[:2]))


def frame(msg_type, body):
    return header(msg_type) + body


def unframe(data, expected_type):
    _check_header(data, expected_type)
    return bytes(data[2:])


def encode_denial(denial):
    return frame(MSG_DENIAL, denial.to_bytes())


def decode_denial(data):
    try:
        return Denial.from_bytes(unframe(data, MSG_DENIAL))
    except ValueError as e:
        raise WireFormatError(f"malformed denial: {e}") from e

