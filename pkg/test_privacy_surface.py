#!/usr/bin/env python3
"""
Nothing that crosses a domain boundary carries raw device context: round
messages hold model entries and summary statistics only.
"""

import dataclasses
import importlib
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.dfl.codec import ROUND_MESSAGE_FIELDS, encode_round_message  # noqa: E402
from src.dfl.data import build_partition  # noqa: E402
from src.dfl.engine import DomainTrainer, RoundMessage, TrainingHyperparams  # noqa: E402
from src.models.context import DeviceContextRecord  # noqa: E402
from src.utils.framing import unpack_fields  # noqa: E402

WIRE_MODULES = ['src.protocol.wire', 'src.protocol.channel', 'src.protocol.tokens', 'src.protocol.preauth',
                'src.dfl.codec']


def test_round_message_fields():
    names = [f.name for f in dataclasses.fields(RoundMessage)]
    assert names == ['sender', 'round', 'update', 'f1', 'class_distribution']
    assert ROUND_MESSAGE_FIELDS == ('sender', 'round', 'f1', 'class_distribution', 'k_top', 'layers')


@pytest.mark.parametrize('module_name', WIRE_MODULES)
def test_wire_modules_do_not_touch_context_records(module_name):
    module = importlib.import_module(module_name)
    assert not any(value is DeviceContextRecord for value in vars(module).values())


def test_encoded_round_message_has_no_feature_vectors():
    partition = build_partition(['dom-0', 'dom-1'], 8, records_per_device=3, test_records_per_device=1, seed=2)
    X, y = partition.arrays('dom-0')
    trainer = DomainTrainer('dom-0', X, y, TrainingHyperparams(k_top=8), seed=0)
    data = encode_round_message(trainer.outbound_message())
    for row in X:
        assert np.asarray(row, dtype='<f8').tobytes() not in data
    _, fields = unpack_fields(data[2:])
    # sender, round, f1, distribution, k_top and one entry list per layer
    assert len(fields) == 5 + len(trainer.model.layers)
    assert np.frombuffer(fields[3], dtype='<f8').tolist() == pytest.approx(list(trainer.class_distribution))
