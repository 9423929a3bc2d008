"""Configuration used for the numerical tolerances and parallelism."""

from .config import THREADS_ENV_VAR
from .config import Config

__all__ = ["Config", "THREADS_ENV_VAR"]
