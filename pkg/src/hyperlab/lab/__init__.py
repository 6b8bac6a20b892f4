"""Experiment runner: configs, scenarios, result files and figures."""
from .config import SCENARIOS, ExperimentConfig, load_config, resolve_point, validate
from .probe import ProbeReport, probe_b2

__all__ = ["SCENARIOS", "ExperimentConfig", "ProbeReport", "load_config", "probe_b2",
           "resolve_point", "validate"]
