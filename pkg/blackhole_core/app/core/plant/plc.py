"""PLC state machines: guards, one repetition per step, last-value reuse."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple

from ....runtime.scheduler import seconds
from ..metrics import plc_transitions_total
from .config import CYCLE_END, MessageSchedule, Slot

logger = logging.getLogger(__name__)

SensorPredicate = Callable[[Mapping[str, float]], bool]


@dataclass(frozen=True)
class Receipt:
    slot_index: int
    repetition: int
    emit_time: int
    delivered_at: int


@dataclass
class Inbox:
    """Deliveries of the current state's slots, keyed by slot index (latest wins)."""

    receipts: Dict[int, Receipt] = field(default_factory=dict)

    def record(self, slot_index: int, repetition: int, emit_time: int, delivered_at: int) -> None:
        self.receipts[slot_index] = Receipt(slot_index, repetition, emit_time, delivered_at)

    def clear(self) -> None:
        self.receipts.clear()


@dataclass(frozen=True)
class TransitionGuard:
    """Fires once every trigger slot was delivered within ``delta_t`` from an eligible repetition.

    An optional ``sensor`` predicate over the local readings must hold as well.
    """

    target_state: str
    delta_t: int = seconds(30.0)
    trigger_slots: FrozenSet[int] = frozenset()
    sensor: Optional[SensorPredicate] = None

    def __post_init__(self) -> None:
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        if not self.trigger_slots and self.sensor is None:
            raise ValueError("a guard needs a trigger slot or a sensor predicate")

    def satisfied(self, inbox: Inbox, sensors: Mapping[str, float], min_repetition: int) -> bool:
        for index in self.trigger_slots:
            receipt = inbox.receipts.get(index)
            if receipt is None or receipt.repetition < min_repetition:
                return False
            if receipt.delivered_at - receipt.emit_time > self.delta_t:
                return False
        return self.sensor is None or self.sensor(sensors)


@dataclass
class SubProcessState:
    plc_id: str
    current_state: str
    states: Tuple[str, ...]
    repetition_counter: int = 0
    guards: Dict[str, List[TransitionGuard]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.current_state not in self.states:
            raise ValueError(f"{self.current_state} is not a state of {self.plc_id}")
        if self.repetition_counter < 0:
            raise ValueError("repetition_counter must be non-negative")

    def enter(self, state: str) -> None:
        if state not in self.states:
            raise ValueError(f"{state} is not a state of {self.plc_id}")
        self.current_state = state
        self.repetition_counter = 0


@dataclass(frozen=True)
class StepResult:
    slots: Tuple[Slot, ...]
    repetition: int
    transition: Optional[Tuple[str, str]] = None


def plc_step(
    plc: SubProcessState,
    schedules: Mapping[str, MessageSchedule],
    inbox: Inbox,
    sensors: Mapping[str, float],
    now: int,
) -> StepResult:
    """Run one iteration at a repetition boundary.

    Guards are checked once the configured repetition count has been emitted. A
    transition to ``CYCLE_END`` returns no slots and leaves the PLC in its first state.
    """

    schedule = schedules[plc.current_state]
    transition: Optional[Tuple[str, str]] = None
    if plc.repetition_counter >= schedule.repetitions_before_transition:
        for guard in plc.guards.get(plc.current_state, ()):
            if guard.satisfied(inbox, sensors, schedule.repetitions_before_transition):
                transition = (plc.current_state, guard.target_state)
                break
    if transition is not None:
        source, target = transition
        plc_transitions_total.labels(plc=plc.plc_id, source=source, target=target).inc()
        logger.info(
            "%s %s -> %s after %s repetitions at t=%.3fs",
            plc.plc_id, source, target, plc.repetition_counter, now / 1e6,
        )
        inbox.clear()
        if target == CYCLE_END:
            plc.enter(plc.states[0])
            return StepResult((), 0, transition)
        plc.enter(target)
    plc.repetition_counter += 1
    return StepResult(schedules[plc.current_state].slots, plc.repetition_counter, transition)


@dataclass
class LastValueStore:
    """Process view kept by a PLC from its peers' messages."""

    defaults: Dict[str, object] = field(default_factory=dict)
    values: Dict[str, Tuple[object, int]] = field(default_factory=dict)
    staleness: Dict[str, int] = field(default_factory=dict)
    lost_at: Dict[str, int] = field(default_factory=dict)

    def update(self, variable: str, value: object, at: int) -> None:
        self.values[variable] = (value, at)
        self.lost_at.pop(variable, None)

    def record_loss(self, variable: str, at: int) -> None:
        """A message carrying ``variable`` was finally lost; the old value stays in use."""

        self.lost_at[variable] = at
        entry = self.values.get(variable)
        if entry is not None:
            self.staleness[variable] = at - entry[1]

    def reset(self) -> None:
        self.values.clear()
        self.staleness.clear()
        self.lost_at.clear()


def tolerate_delay(store: LastValueStore, variable: str, now: int) -> object:
    """Return the last received value of ``variable`` however old it is."""

    entry = store.values.get(variable)
    if entry is None:
        return store.defaults.get(variable)
    value, at = entry
    store.staleness[variable] = now - at
    return value


__all__ = [
    "Inbox",
    "LastValueStore",
    "Receipt",
    "StepResult",
    "SubProcessState",
    "TransitionGuard",
    "plc_step",
    "tolerate_delay",
]
