import json
import logging
from pathlib import Path

from src.exceptions import ConfigError

logger = logging.getLogger(__name__)


def save_to_json(data, file_path):
    """
    Save data to a JSON file, creating the parent directory.

    Args:
        data: The data to save (dict or list)
        file_path: Destination file

    Returns:
        The path written, as a string
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write('\n')
    logger.debug("saved %s", file_path)
    return str(file_path)


def load_json_config(file_path):
    """
    Load a JSON configuration file.

    Raises:
        ConfigError: the file is missing or is not valid JSON (with line and column)
    """
    file_path = Path(file_path)
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"{file_path}: cannot read config: {e.strerror or e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{file_path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{file_path}:1:1: top level must be a JSON object")
    logger.debug("loaded config %s", file_path)
    return data
