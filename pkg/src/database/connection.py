import logging

from sqlalchemy import create_engine, text
from sqlalchemy.pool import StaticPool

from config.settings import STORAGE_URL

logger = logging.getLogger(__name__)


class StorageConnection:
    def __init__(self, url=None):
        """
        Initialize the domain data storage connection.

        Args:
            url: SQLAlchemy URL (default: ZTMESH_STORAGE_URL, an in-process sqlite database)
        """
        self.url = url or STORAGE_URL
        self.engine = None

    def connect(self):
        """Create the engine; in-memory sqlite shares one connection for the process."""
        if self.engine is not None:
            return self.engine
        if self.url.startswith('sqlite'):
            self.engine = create_engine(
                self.url,
                connect_args={'check_same_thread': False},
                poolclass=StaticPool,
            )
        else:
            self.engine = create_engine(self.url)
        logger.debug("storage engine ready: %s", self.url)
        return self.engine

    def execute_query(self, query, params=None):
        """Execute a statement in its own transaction."""
        with self.connect().begin() as conn:
            return conn.execute(text(query), params or {})

    def execute_many(self, query, rows):
        if not rows:
            return
        with self.connect().begin() as conn:
            conn.execute(text(query), rows)

    def fetch_results(self, query, params=None):
        with self.connect().connect() as conn:
            return conn.execute(text(query), params or {}).fetchall()

    def create_tables(self):
        """Create the domain storage tables."""
        statements = [
            """
            CREATE TABLE IF NOT EXISTS certificates (
                domain_id TEXT NOT NULL,
                device_id TEXT NOT NULL,
                device_public_key BLOB NOT NULL,
                issuer_id TEXT NOT NULL,
                am_signature BLOB NOT NULL,
                PRIMARY KEY (domain_id, device_id)
            )
            """,
            """
            CREATE TABLE IF NOT EXISTS context_records (
                domain_id TEXT NOT NULL,
                seq INTEGER NOT NULL,
                device_id TEXT NOT NULL,
                context_class INTEGER NOT NULL,
                features TEXT NOT NULL,
                timestamp REAL NOT NULL,
                PRIMARY KEY (domain_id, seq)
            )
            """,
            "CREATE INDEX IF NOT EXISTS ix_context_device ON context_records (domain_id, device_id)",
        ]
        for statement in statements:
            self.execute_query(statement)
        logger.debug("storage tables created")
