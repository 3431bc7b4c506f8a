"""Logging utilities for the shotsort toolkit."""

import logging
import sys
from typing import Dict, Any


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Set up logging configuration."""
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout)
        ],
        force=True,
    )
    return logging.getLogger('shotsort')


def log_run_stats(logger: logging.Logger, stats: Dict[str, Any], title: str = "Run Statistics") -> None:
    """Log run statistics in a structured format."""
    banner = f"=== {title} ==="
    logger.info(banner)
    for key, value in stats.items():
        logger.info(f"{key}: {value}")
    logger.info("=" * len(banner))


def log_epoch(logger: logging.Logger, epoch: int, n_epochs: int, loss: float) -> None:
    """Log the mean loss of one training epoch."""
    logger.info(f"epoch {epoch}/{n_epochs}: mean loss {loss:.6f}")
