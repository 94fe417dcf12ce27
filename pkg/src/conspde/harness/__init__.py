"""Configuration, persistence and the ``conspde`` command line."""

from .cli import main, replay, run
from .config import ConfigError, ExperimentConfig, load_config

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "main", "replay", "run"]
