"""Configuration, orchestration, persistence and plots for Monte Carlo runs."""

from .config import RunConfig, load_config_file
from .simulate import replica_row, simulate

__all__ = ["RunConfig", "load_config_file", "replica_row", "simulate"]
