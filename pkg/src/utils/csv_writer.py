import logging
from pathlib import Path

import pandas as pd

from src.exceptions import MissingInput

logger = logging.getLogger(__name__)

LATENCY_COLUMNS = ['request_id', 'phase', 'n', 'q', 'ms']
THROUGHPUT_COLUMNS = ['n', 'devices', 'rate_rps']
COUNTER_COLUMNS = ['label', 'exp', 'h', 'sig', 'i', 'cp', 'm', 'cs']
DFL_COLUMNS = ['round', 'domain', 'f1', 'test_f1', 'eta', 'neighbor', 'waf', 'weight']
CELL_COLUMNS = ['n', 'q', 'devices', 'grant', 'denial', 'timeout', 'state_hash']


def write_csv(rows, file_path, columns):
    """
    Write rows (dicts or a DataFrame) with a fixed header; an empty table
    still gets its header line.
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
    frame = frame.reindex(columns=columns)
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(file_path, index=False, lineterminator='\n')
    logger.debug("wrote %d rows to %s", len(frame), file_path)
    return str(file_path)


def read_csv(file_path):
    file_path = Path(file_path)
    if not file_path.is_file():
        raise MissingInput(f"{file_path} not found")
    return pd.read_csv(file_path)
