"""
Length-prefixed field framing shared by requests, certificates, tokens and
round messages.

    version      1 byte
    field_count  1 byte
    fields       field_count x (u16 big-endian length, value bytes)
"""

import struct

from src.exceptions import WireFormatError

MAX_FIELD = 0xFFFF
MAX_FRAME = 64 * 1024


def pack_fields(version, values):
    if len(values) > 0xFF:
        raise WireFormatError("too many fields")
    parts = [struct.pack('>BB', version, len(values))]
    for value in values:
        if isinstance(value, str):
            value = value.encode('utf-8')
        if len(value) > MAX_FIELD:
            raise WireFormatError("field longer than 65535 bytes")
        parts.append(struct.pack('>H', len(value)))
        parts.append(value)
    frame = b''.join(parts)
    if len(frame) >= MAX_FRAME:
        raise WireFormatError("frame exceeds 64 KiB")
    return frame


def unpack_fields(data, expected_version=None, expected_count=None):
    """Inverse of pack_fields; returns (version, [bytes, ...])."""
    if len(data) < 2:
        raise WireFormatError("truncated header")
    version, count = data[0], data[1]
    if expected_version is not None and version != expected_version:
        raise WireFormatError(f"unsupported version 0x{version:02x}")
    if expected_count is not None and count != expected_count:
        raise WireFormatError(f"expected {expected_count} fields, got {count}")
    values = []
    offset = 2
    for _ in range(count):
        if offset + 2 > len(data):
            raise WireFormatError("truncated field length")
        (length,) = struct.unpack_from('>H', data, offset)
        offset += 2
        if offset + length > len(data):
            raise WireFormatError("truncated field value")
        values.append(bytes(data[offset:offset + length]))
        offset += length
    if offset != len(data):
        raise WireFormatError("trailing bytes after last field")
    return version, values
