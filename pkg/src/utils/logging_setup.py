import logging

from config.settings import LOG_LEVEL

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"


def configure_logging(level=None):
    """One stream handler on the root logger; level defaults to ZTMESH_LOG."""
    level = (level or LOG_LEVEL).upper()
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, '_ztmesh', False):
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._ztmesh = True
    root.addHandler(handler)
    root.setLevel(getattr(logging, level, logging.INFO))
    return root
