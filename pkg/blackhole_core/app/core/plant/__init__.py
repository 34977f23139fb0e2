"""Physical process, PLC control logic and message schedules of the plant."""

from .config import ADDRESSES, CYCLE_END, MessageSchedule, PlantConfig, Slot, build_swat_schedules
from .plc import Inbox, LastValueStore, SubProcessState, TransitionGuard, plc_step, tolerate_delay
from .process import LOG_FIELDS, LogEntry, Plant, TransitionRecord
from .tanks import FlowRates, Hydraulics, TankState, integrate_physics

__all__ = [
    "ADDRESSES",
    "CYCLE_END",
    "FlowRates",
    "Hydraulics",
    "Inbox",
    "LOG_FIELDS",
    "LastValueStore",
    "LogEntry",
    "MessageSchedule",
    "Plant",
    "PlantConfig",
    "Slot",
    "SubProcessState",
    "TankState",
    "TransitionGuard",
    "TransitionRecord",
    "build_swat_schedules",
    "integrate_physics",
    "plc_step",
    "tolerate_delay",
]
