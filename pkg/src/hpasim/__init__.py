"""Discrete-time simulator for disruption-aware hierarchical autoscaling."""

from .engine import RunResult, Simulation, run
from .model import (
    ConfigError,
    Decision,
    DisruptionStatus,
    Mode,
    ScenarioConfig,
    ServiceSpec,
    ServiceState,
    benchmark_cluster,
    benchmark_config,
    load_config,
    validate_config,
)

__version__ = "0.1.0"
