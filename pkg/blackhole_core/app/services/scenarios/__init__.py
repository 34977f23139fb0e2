"""Scenario configuration and the experiment pipelines."""

from .config import SCENARIOS, ScenarioConfig, build_config, parse_config_text
from .runner import ExperimentReport, ProfileRun, run_profile, run_scenario

__all__ = [
    "ExperimentReport",
    "ProfileRun",
    "SCENARIOS",
    "ScenarioConfig",
    "build_config",
    "parse_config_text",
    "run_profile",
    "run_scenario",
]
