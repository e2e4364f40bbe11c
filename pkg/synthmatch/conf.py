"""
Configuration.

Environment-driven settings and numeric defaults shared by the package.
"""
import logging
import os
import sys
from typing import Optional

from .exceptions import ConfigError

# environment variable capping the worker pool of the experiment harness.
THREADS_ENV = 'SMC_THREADS'

## Quadratic-program defaults
QP_TOL: float = 1e-8
QP_MAX_ITER: int = 100_000
POWER_ITERATIONS: int = 50
POWER_RTOL: float = 1e-6
PSD_TOL: float = 1e-8

## Logging
LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"


def resolve_workers(workers: Optional[int] = None) -> int:
    """Number of worker processes: explicit value, then SMC_THREADS, then all cores."""
    if workers is None:
        env = os.environ.get(THREADS_ENV, '').strip()
        if env:
            try:
                workers = int(env)
            except ValueError as ex:
                raise ConfigError(
                    f"{THREADS_ENV} must be a positive integer, got {env!r}"
                ) from ex
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError(
            f"worker count must be a positive integer, got {workers}"
        )
    return workers


def setup_logging(level: int = logging.INFO) -> None:
    """Configure the root logger on stderr (used by the command line only)."""
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
        stream=sys.stderr,
        force=True
    )
