"""Logging configuration shared by the command-line entry points."""

import logging
import sys


def configure_logging(level: str = "INFO", quiet: bool = False, fmt: str = "") -> None:
    """
    Configure root logging to stderr.

    Args:
        level: Log level name
        quiet: Raise the level to WARNING
        fmt: Log record format (default: timestamp, logger, level, message)
    """
    logging.basicConfig(
        format=fmt or "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=logging.WARNING if quiet else getattr(logging, level.upper(), logging.INFO),
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
