"""
Seeded synthetic device-context data with a non-IID split across domains.

Every device id maps to a fixed context class and a fixed signature in
[0,1]^input_dim (its class prototype plus a bounded per-device offset).
Context records are jittered copies of the signature. Devices are assigned
to domains class by class with Dirichlet proportions, so each domain sees a
skewed slice of the classes.
"""

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from config.settings import CLASS_COUNT, DIRICHLET_ALPHA, INPUT_DIM
from src.exceptions import EmptyInput
from src.models.context import DeviceContextRecord

logger = logging.getLogger(__name__)

PROTOTYPE_LOW = 0.25
PROTOTYPE_HIGH = 0.75
DEVICE_OFFSET = 0.15
RECORD_JITTER = 0.05
MAX_PARTITION_ATTEMPTS = 1000


def device_ids(count):
    return [f"dev-{k:04d}" for k in range(count)]


def _hash_words(label, device_id, count):
    words = []
    block = 0
    while len(words) < count:
        h = hashlib.sha256(f"ztmesh/{label}/{block}/{device_id}".encode('utf-8')).digest()
        words.extend(int.from_bytes(h[i:i + 4], 'big') for i in range(0, 32, 4))
        block += 1
    return np.array(words[:count], dtype=float) / 2 ** 32


def device_class(device_id, classes=CLASS_COUNT):
    h = hashlib.sha256(f"ztmesh/class/{device_id}".encode('utf-8')).digest()
    return int.from_bytes(h[:8], 'big') % classes


def class_prototypes(input_dim=INPUT_DIM, classes=CLASS_COUNT):
    """One row per class: high on the class's block of features, low elsewhere."""
    if classes > input_dim:
        return np.random.default_rng(0).uniform(0.0, 1.0, size=(classes, input_dim))
    prototypes = np.full((classes, input_dim), PROTOTYPE_LOW)
    block = input_dim // classes
    for c in range(classes):
        prototypes[c, c * block:(c + 1) * block] = PROTOTYPE_HIGH
    return prototypes


def device_signature(device_id, input_dim=INPUT_DIM, classes=CLASS_COUNT):
    """Stable featurization of a device id."""
    prototype = class_prototypes(input_dim, classes)[device_class(device_id, classes)]
    offset = 2 * DEVICE_OFFSET * (_hash_words('signature', device_id, input_dim) - 0.5)
    return np.clip(prototype + offset, 0.0, 1.0)


def make_records(device_id, count, rng, input_dim=INPUT_DIM, classes=CLASS_COUNT,
                 jitter=RECORD_JITTER, start_ms=0.0, step_ms=1000.0):
    signature = device_signature(device_id, input_dim, classes)
    label = device_class(device_id, classes)
    records = []
    for r in range(count):
        features = np.clip(signature + rng.normal(0.0, jitter, size=input_dim), 0.0, 1.0)
        records.append(DeviceContextRecord(device_id, label, tuple(features), start_ms + r * step_ms))
    return records


@dataclass
class SyntheticPartition:
    domain_devices: dict
    train_records: dict
    test_X: np.ndarray
    test_y: np.ndarray
    classes: int = CLASS_COUNT
    device_home: dict = field(default_factory=dict)

    def arrays(self, domain_id):
        records = self.train_records[domain_id]
        X = np.array([r.feature_vector for r in records], dtype=float)
        y = np.array([r.context_class for r in records], dtype=int)
        return X, y


def dirichlet_split(devices, domain_ids, rng, alpha=DIRICHLET_ALPHA, classes=CLASS_COUNT, min_devices=1):
    """Assign devices to domains per class with Dirichlet(alpha) proportions."""
    if len(devices) < len(domain_ids) * min_devices:
        raise EmptyInput(f"{len(devices)} devices cannot cover {len(domain_ids)} domains")
    by_class = {c: [d for d in devices if device_class(d, classes) == c] for c in range(classes)}
    for _ in range(MAX_PARTITION_ATTEMPTS):
        assignment = {domain: [] for domain in domain_ids}
        for c in range(classes):
            members = by_class[c]
            if not members:
                continue
            order = rng.permutation(len(members))
            proportions = rng.dirichlet(np.repeat(alpha, len(domain_ids)))
            cuts = (np.cumsum(proportions) * len(members)).astype(int)[:-1]
            for domain, part in zip(domain_ids, np.split(order, cuts)):
                assignment[domain].extend(members[i] for i in part)
        if min(len(v) for v in assignment.values()) >= min_devices:
            return {domain: sorted(v) for domain, v in assignment.items()}
    raise EmptyInput("could not give every domain a device; raise device count or alpha")


def build_partition(domain_ids, device_count, records_per_device=20, test_records_per_device=5,
                    alpha=DIRICHLET_ALPHA, seed=0, input_dim=INPUT_DIM, classes=CLASS_COUNT):
    """
    Generate the non-IID training split and a global held-out test set.

    Args:
        domain_ids: Domains receiving data
        device_count: Number of devices in the population
        records_per_device: Training records per device (in its assigned domain)
        test_records_per_device: Held-out records per device
        alpha: Dirichlet concentration
        seed: Data-generation seed

    Returns:
        SyntheticPartition
    """
    rng = np.random.default_rng(seed)
    devices = device_ids(device_count)
    assignment = dirichlet_split(devices, list(domain_ids), rng, alpha, classes)

    train_records = {}
    device_home = {}
    for domain in domain_ids:
        records = []
        for device_id in assignment[domain]:
            device_home[device_id] = domain
            records.extend(make_records(device_id, records_per_device, rng, input_dim, classes))
        train_records[domain] = records

    test_X, test_y = [], []
    for device_id in devices:
        for record in make_records(device_id, test_records_per_device, rng, input_dim, classes):
            test_X.append(record.feature_vector)
            test_y.append(record.context_class)

    for domain in domain_ids:
        labels = [r.context_class for r in train_records[domain]]
        logger.debug("%s: %d devices, class counts %s", domain, len(assignment[domain]),
                     np.bincount(labels, minlength=classes).tolist())
    return SyntheticPartition(
        domain_devices=assignment,
        train_records=train_records,
        test_X=np.array(test_X, dtype=float).reshape(-1, input_dim),
        test_y=np.array(test_y, dtype=int),
        classes=classes,
        device_home=device_home,
    )
