"""Deterministic simulator of microservice chains served by an autoscaled
VM tier with controlled spillover to a serverless tier."""

from ._core import (
    SimulationError,
    ValidationError,
    __version__,
    compute_weights,
    load_scenario,
    nearest_rank,
    run,
    run_config,
    synthesize_autoscaler_metric,
)

__all__ = [
    "SimulationError",
    "ValidationError",
    "__version__",
    "compute_weights",
    "load_scenario",
    "nearest_rank",
    "run",
    "run_config",
    "synthesize_autoscaler_metric",
]
