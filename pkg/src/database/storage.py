import logging
from pathlib import Path

import numpy as np
import pandas as pd

from src.database.connection import StorageConnection
from src.exceptions import DuplicateId
from src.models.certificate import Certificate
from src.models.context import DeviceContextRecord

logger = logging.getLogger(__name__)


class DomainStorage:
    """
    The per-domain data storage system: registered certificates keyed by
    device id and the append-only context dataset D_i.
    """

    def __init__(self, domain_id, connection=None, persist_path=None):
        """
        Args:
            domain_id: Owning domain
            connection: StorageConnection instance (optional, one in-memory database per domain)
            persist_path: Optional TSV file; every ingested record is appended to it
        """
        self.domain_id = domain_id
        self.db = connection or StorageConnection()
        self.db.create_tables()
        self.persist_path = Path(persist_path) if persist_path else None
        self._record_count = self.db.fetch_results(
            "SELECT COALESCE(MAX(seq), 0) FROM context_records WHERE domain_id = :domain_id",
            {'domain_id': domain_id},
        )[0][0]

    # certificates

    def store_certificate(self, certificate):
        if self.get_certificate(certificate.device_id) is not None:
            raise DuplicateId(f"{certificate.device_id} already registered in {self.domain_id}")
        self.db.execute_query(
            """
            INSERT INTO certificates (domain_id, device_id, device_public_key, issuer_id, am_signature)
            VALUES (:domain_id, :device_id, :device_public_key, :issuer_id, :am_signature)
            """,
            {
                'domain_id': self.domain_id,
                'device_id': certificate.device_id,
                'device_public_key': certificate.device_public_key,
                'issuer_id': certificate.issuer_id,
                'am_signature': certificate.am_signature,
            },
        )

    def get_certificate(self, device_id):
        rows = self.db.fetch_results(
            "SELECT device_id, device_public_key, issuer_id, am_signature FROM certificates "
            "WHERE domain_id = :domain_id AND device_id = :device_id",
            {'domain_id': self.domain_id, 'device_id': device_id},
        )
        if not rows:
            return None
        row = rows[0]
        return Certificate(row[0], bytes(row[1]), row[2], bytes(row[3]))

    def is_registered(self, device_id):
        return self.get_certificate(device_id) is not None

    # context records

    def append_records(self, records):
        rows = []
        for record in records:
            self._record_count += 1
            rows.append({
                'domain_id': self.domain_id,
                'seq': self._record_count,
                'device_id': record.device_id,
                'context_class': record.context_class,
                'features': ','.join(repr(x) for x in record.feature_vector),
                'timestamp': record.timestamp,
            })
        self.db.execute_many(
            """
            INSERT INTO context_records (domain_id, seq, device_id, context_class, features, timestamp)
            VALUES (:domain_id, :seq, :device_id, :context_class, :features, :timestamp)
            """,
            rows,
        )
        if self.persist_path is not None and records:
            self.persist_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.persist_path, 'a', encoding='utf-8') as f:
                f.writelines(record.to_tsv_line() for record in records)

    def record_count(self):
        return self._record_count

    def records(self):
        rows = self.db.fetch_results(
            "SELECT device_id, context_class, features, timestamp FROM context_records "
            "WHERE domain_id = :domain_id ORDER BY seq",
            {'domain_id': self.domain_id},
        )
        return [
            DeviceContextRecord(r[0], int(r[1]), tuple(float(x) for x in r[2].split(',')), float(r[3]))
            for r in rows
        ]

    def latest_record(self, device_id):
        rows = self.db.fetch_results(
            """
            SELECT device_id, context_class, features, timestamp FROM context_records
            WHERE domain_id = :domain_id AND device_id = :device_id ORDER BY seq DESC LIMIT 1
            """,
            {'domain_id': self.domain_id, 'device_id': device_id},
        )
        if not rows:
            return None
        r = rows[0]
        return DeviceContextRecord(r[0], int(r[1]), tuple(float(x) for x in r[2].split(',')), float(r[3]))

    def has_context(self, device_id):
        rows = self.db.fetch_results(
            "SELECT 1 FROM context_records WHERE domain_id = :domain_id AND device_id = :device_id LIMIT 1",
            {'domain_id': self.domain_id, 'device_id': device_id},
        )
        return bool(rows)

    def dataset_arrays(self):
        """(X, y) of the whole local dataset, in ingestion order."""
        records = self.records()
        if not records:
            return np.zeros((0, 0)), np.zeros(0, dtype=int)
        X = np.array([r.feature_vector for r in records], dtype=float)
        y = np.array([r.context_class for r in records], dtype=int)
        return X, y


def load_context_file(file_path):
    """
    Load a persisted context file back into records.

    Args:
        file_path: TSV file written by DomainStorage

    Returns:
        List of DeviceContextRecord
    """
    frame = pd.read_csv(
        file_path, sep='\t', header=None,
        names=['device_id', 'context_class', 'features', 'timestamp'],
        dtype={'device_id': str, 'context_class': int, 'features': str, 'timestamp': float},
    )
    records = [
        DeviceContextRecord(row.device_id, int(row.context_class),
                            tuple(float(x) for x in row.features.split(',')), float(row.timestamp))
        for row in frame.itertuples(index=False)
    ]
    logger.info("loaded %d context records from %s", len(records), file_path)
    return records
