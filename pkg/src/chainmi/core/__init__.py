"""Core modules for chainmi."""

from chainmi.core.config import DEFAULTS, Defaults, RunConfig, load_run_config
from chainmi.core.exceptions import ChainMIError, ConfigError
from chainmi.core import logger

__all__ = ["DEFAULTS", "Defaults", "RunConfig", "load_run_config", "ChainMIError", "ConfigError", "logger"]
