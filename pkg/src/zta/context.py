import logging

from config.settings import CLASS_COUNT, INPUT_DIM
from src.exceptions import DimensionMismatch

logger = logging.getLogger(__name__)


class ContextAwareModule:
    """Validates device context records and appends them to the domain dataset."""

    def __init__(self, storage, input_dim=INPUT_DIM, classes=CLASS_COUNT):
        self.storage = storage
        self.input_dim = input_dim
        self.classes = classes

    def _check(self, record):
        if len(record.feature_vector) != self.input_dim:
            raise DimensionMismatch(f"expected {self.input_dim} features, got {len(record.feature_vector)}")
        if not 0 <= record.context_class < self.classes:
            raise DimensionMismatch(f"context class {record.context_class} outside [0, {self.classes})")

    def ingest(self, record):
        self._check(record)
        self.storage.append_records([record])
        return self.storage

    def ingest_many(self, records):
        records = list(records)
        for record in records:
            self._check(record)
        self.storage.append_records(records)
        logger.debug("ingested %d context records", len(records))
        return self.storage


def cam_ingest(cam, record):
    return cam.ingest(record)
