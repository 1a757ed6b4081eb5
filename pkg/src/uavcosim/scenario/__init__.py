"""Scenario definition, world building, and run orchestration."""

from .autogen import scale_scenario
from .config import ConfigError, ScenarioCfg, load_config, parse_config, preset_names
from .runner import RunResult, StallFault, prepare, run_scenario

__all__ = ["ConfigError", "ScenarioCfg", "load_config", "parse_config",
           "preset_names", "RunResult", "StallFault", "prepare",
           "run_scenario", "scale_scenario"]
