from dataclasses import dataclass

import numpy as np

from src.dfl.mlp import ModelParameters
from src.exceptions import IndexOutOfRange, LengthMismatch


@dataclass(frozen=True)
class SparseUpdate:
    """Per-layer (indices, values) kept by TopK, plus the dense layer lengths."""
    indices: tuple
    values: tuple
    lengths: tuple
    k_top: int
    architecture: object = None

    def entries(self, layer):
        return list(zip(self.indices[layer].tolist(), self.values[layer].tolist()))

    @property
    def entry_counts(self):
        return [len(idx) for idx in self.indices]

    @classmethod
    def from_entries(cls, layers, lengths, k_top, architecture=None):
        """Build from [[(index, value), ...], ...]; handy for hand-written updates."""
        indices, values = [], []
        for entries in layers:
            indices.append(np.array([i for i, _ in entries], dtype=np.int64))
            values.append(np.array([v for _, v in entries], dtype=float))
        return cls(tuple(indices), tuple(values), tuple(lengths), k_top, architecture)


def compress_topk(model, k_top):
    """
    Keep the min(k_top, len) largest-magnitude entries of each layer.

    Ties go to the lower index. Retained indices are returned in increasing
    order with their original signed values.
    """
    if k_top < 1:
        raise ValueError("k_top must be >= 1")
    indices, values = [], []
    for layer in model.layers:
        k = min(k_top, len(layer))
        order = np.lexsort((np.arange(len(layer)), -np.abs(layer)))
        keep = np.sort(order[:k])
        indices.append(keep.astype(np.int64))
        values.append(layer[keep].copy())
    return SparseUpdate(tuple(indices), tuple(values), tuple(model.layer_lengths), k_top, model.architecture)


def decompress(update):
    layers = []
    for idx, vals, length in zip(update.indices, update.values, update.lengths):
        if len(idx) != len(vals):
            raise LengthMismatch("indices and values differ in length")
        if len(idx) and (idx.min() < 0 or idx.max() >= length):
            raise IndexOutOfRange(f"index outside layer of length {length}")
        dense = np.zeros(length)
        dense[idx] = vals
        layers.append(dense)
    return ModelParameters(layers, update.architecture)
