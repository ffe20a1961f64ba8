"""Configuration-driven scenario runner."""

from .config import ConfigError, Scenario, ScenarioConfig, build, load_config, resolve, validate, validate_data
from .runner import RunReport, batch, run, run_file

__all__ = [
    "ConfigError",
    "Scenario",
    "ScenarioConfig",
    "build",
    "load_config",
    "resolve",
    "validate",
    "validate_data",
    "RunReport",
    "batch",
    "run",
    "run_file",
]
