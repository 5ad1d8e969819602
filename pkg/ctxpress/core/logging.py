import logging
import sys
from typing import Optional

from ctxpress.core.config import settings

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None) -> None:
    """Send ctxpress logs to standard error at the configured level"""
    root = logging.getLogger("ctxpress")
    root.setLevel((level or settings.log_level).upper())

    if not any(getattr(h, "_ctxpress", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._ctxpress = True
        root.addHandler(handler)
    root.propagate = False
