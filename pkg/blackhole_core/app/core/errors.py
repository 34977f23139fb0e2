"""Exception hierarchy shared by the simulation modules."""
from __future__ import annotations

from typing import Optional


class SimulationError(Exception):
    """Base error carrying a machine-parsable class name for the CLI."""

    error_class = "simulation_error"

    def __init__(self, message: str = "", *, error_class: Optional[str] = None) -> None:
        super().__init__(message)
        if error_class:
            self.error_class = error_class


class SchedulingError(SimulationError):
    error_class = "schedule_in_past"


class LinkError(SimulationError):
    error_class = "endpoint_mismatch"


class FluctuationError(SimulationError):
    error_class = "span_too_short"


class CycleBoundaryError(SimulationError):
    error_class = "no_cycle_boundary"


class InconsistentCyclesError(SimulationError):
    error_class = "no_consistent_cycle"


class UndecomposableSequenceError(SimulationError):
    error_class = "undecomposable_sequence"


class TrackingLostError(SimulationError):
    error_class = "tracking_lost"

    def __init__(self, message: str, *, state_index: int, offset: int, time_us: int = 0) -> None:
        super().__init__(message)
        self.state_index = state_index
        self.offset = offset
        self.time_us = time_us


class DetectorError(SimulationError):
    error_class = "untrained_model"


class ConfigError(SimulationError):
    error_class = "invalid_config"


class OutputError(SimulationError):
    error_class = "unwritable_output"


__all__ = [
    "SimulationError",
    "SchedulingError",
    "LinkError",
    "FluctuationError",
    "CycleBoundaryError",
    "InconsistentCyclesError",
    "UndecomposableSequenceError",
    "TrackingLostError",
    "DetectorError",
    "ConfigError",
    "OutputError",
]
