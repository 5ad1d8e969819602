import argparse
import logging
from typing import List, Optional

from ctxpress.cli.main import register_commands
from ctxpress.core.config import settings
from ctxpress.core.errors import ConfigError, CtxpressError
from ctxpress.core.logging import setup_logging

logger = logging.getLogger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the command-line parser"""
    parser = argparse.ArgumentParser(prog=settings.app_name, description=settings.description)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    parser.add_argument("--log-level", default=settings.log_level)
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_commands(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error("[ERROR] Invalid configuration: %s", e)
        return 2
    except (CtxpressError, OSError) as e:
        logger.error("[ERROR] %s", e)
        return 1
