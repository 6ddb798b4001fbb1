"""
Round-message and checkpoint byte formats (see docs/wire.md).

Round message: header (0x01, 0x02) followed by a framed body with the fields
    sender, round, f1, class_distribution, k_top, layer_0, ..., layer_n
where numbers are little-endian (f1 float64, distribution float64[],
k_top/round as ASCII) and each layer is
    u32 dense_length | u32 count | u32[count] indices | float64[count] values

Checkpoint:
    b'ZTCK' | u8 version | u8 layer_count |
    layer_count x (u16 fan_in | u16 fan_out | u8 activation) |
    float64 values of every layer in order
all little-endian.
"""

import struct

import numpy as np

from src.dfl.compression import SparseUpdate
from src.dfl.engine import RoundMessage
from src.dfl.mlp import Architecture, ModelParameters
from src.exceptions import WireFormatError
from src.protocol.wire import MSG_ROUND, WIRE_VERSION, frame, unframe
from src.utils.framing import pack_fields, unpack_fields

ROUND_MESSAGE_FIELDS = ('sender', 'round', 'f1', 'class_distribution', 'k_top', 'layers')

CHECKPOINT_MAGIC = b'ZTCK'
CHECKPOINT_VERSION = 0x01
ACTIVATION_CODES = {'relu': 0, 'softmax': 1}
ACTIVATION_NAMES = {v: k for k, v in ACTIVATION_CODES.items()}


def _encode_layer(indices, values, length):
    return (struct.pack('<II', length, len(indices))
            + np.asarray(indices, dtype='<u4').tobytes()
            + np.asarray(values, dtype='<f8').tobytes())


def _decode_layer(blob):
    if len(blob) < 8:
        raise WireFormatError("truncated layer")
    length, count = struct.unpack_from('<II', blob, 0)
    if len(blob) != 8 + 12 * count:
        raise WireFormatError("layer size does not match entry count")
    indices = np.frombuffer(blob, dtype='<u4', count=count, offset=8).astype(np.int64)
    values = np.frombuffer(blob, dtype='<f8', count=count, offset=8 + 4 * count).astype(float)
    return indices, values, length


def encode_round_message(message):
    update = message.update
    fields = [
        message.sender,
        str(message.round),
        struct.pack('<d', message.f1),
        np.asarray(message.class_distribution, dtype='<f8').tobytes(),
        str(update.k_top),
    ]
    fields.extend(_encode_layer(idx, vals, length)
                  for idx, vals, length in zip(update.indices, update.values, update.lengths))
    return frame(MSG_ROUND, pack_fields(WIRE_VERSION, fields))


def decode_round_message(data, architecture=None):
    _, values = unpack_fields(unframe(data, MSG_ROUND), WIRE_VERSION)
    if len(values) < 5:
        raise WireFormatError("round message is missing fields")
    sender, round_, f1, distribution, k_top = values[:5]
    if len(f1) != 8 or len(distribution) % 8:
        raise WireFormatError("bad numeric field length")
    layers = [_decode_layer(blob) for blob in values[5:]]
    update = SparseUpdate(
        indices=tuple(l[0] for l in layers),
        values=tuple(l[1] for l in layers),
        lengths=tuple(l[2] for l in layers),
        k_top=int(k_top),
        architecture=architecture,
    )
    return RoundMessage(
        sender=sender.decode('utf-8'),
        round=int(round_),
        update=update,
        f1=struct.unpack('<d', f1)[0],
        class_distribution=tuple(np.frombuffer(distribution, dtype='<f8').tolist()),
    )


def checkpoint_bytes(model):
    arch = model.architecture
    head = [CHECKPOINT_MAGIC, struct.pack('<BB', CHECKPOINT_VERSION, len(arch.layer_shapes))]
    for (fan_in, fan_out), activation in zip(arch.layer_shapes, arch.activations):
        head.append(struct.pack('<HHB', fan_in, fan_out, ACTIVATION_CODES[activation]))
    body = b''.join(np.asarray(layer, dtype='<f8').tobytes() for layer in model.layers)
    return b''.join(head) + body


def checkpoint_from_bytes(data):
    if data[:4] != CHECKPOINT_MAGIC:
        raise WireFormatError("not a checkpoint")
    layer_count = 2
    header_size = 6 + 5 * layer_count
    if len(data) < header_size:
        raise WireFormatError(f"checkpoint header truncated at {len(data)} bytes")
    version, count = struct.unpack_from('<BB', data, 4)
    if version != CHECKPOINT_VERSION:
        raise WireFormatError(f"unsupported checkpoint version {version}")
    if count != layer_count:
        raise WireFormatError("only input-hidden-output checkpoints are supported")
    offset = 6
    shapes, activations = [], []
    for _ in range(layer_count):
        fan_in, fan_out, code = struct.unpack_from('<HHB', data, offset)
        if code not in ACTIVATION_NAMES:
            raise WireFormatError(f"unknown activation code {code}")
        shapes.append((fan_in, fan_out))
        activations.append(ACTIVATION_NAMES[code])
        offset += 5
    if shapes[0][1] != shapes[1][0] or min(min(shape) for shape in shapes) < 1:
        raise WireFormatError(f"layer shapes {shapes} do not chain")
    arch = Architecture(shapes[0][0], shapes[0][1], shapes[1][1], tuple(activations))
    expected = offset + 8 * sum(arch.layer_sizes)
    if len(data) != expected:
        raise WireFormatError(f"checkpoint is {len(data)} bytes, expected {expected}")
    layers = []
    for size in arch.layer_sizes:
        layers.append(np.frombuffer(data, dtype='<f8', count=size, offset=offset).astype(float))
        offset += 8 * size
    return ModelParameters(layers, arch)


def save_checkpoint(model, path):
    with open(path, 'wb') as f:
        f.write(checkpoint_bytes(model))


def load_checkpoint(path):
    with open(path, 'rb') as f:
        return checkpoint_from_bytes(f.read())
