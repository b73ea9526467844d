"""
Configuration-driven command line: generate data, train, run grids and
merge reports.
"""

from .config import (
    PRESET_ENV,
    PRESETS,
    SCHEMA_VERSION,
    ConfigError,
    find_preset,
    load_config,
    parse_config,
)
from .main import cmd_generate, cmd_grid, cmd_report, cmd_train, main

__all__ = [
    "ConfigError",
    "SCHEMA_VERSION",
    "PRESET_ENV",
    "PRESETS",
    "parse_config",
    "load_config",
    "find_preset",
    "main",
    "cmd_generate",
    "cmd_train",
    "cmd_grid",
    "cmd_report",
]
