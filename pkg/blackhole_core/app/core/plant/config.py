"""Plant constants and per-state message schedules of the SWaT-like testbed."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict, List, Mapping, Tuple

from ....runtime.scheduler import US_PER_MS, seconds

ADDRESSES: Dict[str, str] = {
    "P1": "192.168.1.10",
    "P2": "192.168.1.20",
    "P3": "192.168.1.30",
    "P4": "192.168.1.40",
    "P5": "192.168.1.50",
    "P6": "192.168.1.60",
    "SCADA": "192.168.1.200",
}

P1_STATES = ("S11", "S12", "S13")
P2_STATES = ("S21", "S22", "S23")
CYCLE_END = "END"


@dataclass(frozen=True)
class Slot:
    """One message position in a state's repetition."""

    index: int
    src: str
    dst: str
    direction: str
    payload_length: int
    kind: str
    critical_in_final_repetition: bool = False

    @property
    def peer(self) -> str:
        return self.dst if self.src == "P1" else self.src


@dataclass(frozen=True)
class MessageSchedule:
    state: str
    slots: Tuple[Slot, ...]
    repetitions_before_transition: int
    intra_slot_gap: int
    repetition_gap: int

    @property
    def critical_slots(self) -> Tuple[int, ...]:
        return tuple(slot.index for slot in self.slots if slot.critical_in_final_repetition)

    def repetition_span(self) -> int:
        """Time from the first slot of a repetition to the first slot of the next."""

        return (len(self.slots) - 1) * self.intra_slot_gap + self.repetition_gap


@dataclass
class PlantConfig:
    cycle_operational_duration_s: float = 8 * 3600.0
    cycle_idle_gap_s: float = 2 * 3600.0
    tank_capacity_level: float = 1000.0
    functional_max_level: float = 800.0
    risky_level: float = 900.0
    t1_initial_level: float = 700.0
    inflow_rate: float = 0.5
    outflow_rate: float = 0.5
    t2_capacity_level: float = 1000.0
    t2_full_level: float = 800.0
    consumer_rate: float = 0.5
    output_rate: float = 0.1
    treatment_latency_s: float = 3800.0
    p2_ready_after_s: float = 1.0
    p2_coordination_tolerance_s: float = 300.0
    delta_t_s: float = 30.0
    log_period_s: float = 1.0
    # fixed analyser readings of the P2 dosing station
    ait201_us_cm: float = 251.3
    ait202_ph: float = 7.2
    ait203_mv: float = 320.0
    intra_slot_gap_ms: float = 55.0
    repetition_gap_ms: float = 150.0
    link_latency_ms: float = 10.0
    s11_repetitions: int = 3
    s12_repetitions: int = 125
    s13_repetitions: int = 15226

    def __post_init__(self) -> None:
        if not 0 < self.functional_max_level < self.risky_level < self.tank_capacity_level:
            raise ValueError("levels must satisfy 0 < functional_max < risky < capacity")
        if self.delta_t_s <= 0 or self.p2_coordination_tolerance_s <= 0:
            raise ValueError("delta_t_s and p2_coordination_tolerance_s must be positive")
        if self.log_period_s <= 0:
            raise ValueError("log_period_s must be positive")
        if min(self.s11_repetitions, self.s12_repetitions, self.s13_repetitions) < 1:
            raise ValueError("repetition counts must be positive")

    @property
    def cycle_period(self) -> int:
        return seconds(self.cycle_operational_duration_s + self.cycle_idle_gap_s)

    @classmethod
    def from_dict(cls, payload: Mapping[str, object]) -> "PlantConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs: Dict[str, object] = {}
        for key, value in payload.items():
            if key not in known:
                continue
            kwargs[key] = int(value) if key.endswith("_repetitions") else float(value)  # type: ignore[arg-type]
        return cls(**kwargs)  # type: ignore[arg-type]


class _LengthAllocator:
    """Hands out distinct payload lengths so every slot kind has its own wire length."""

    def __init__(self, start: int = 40, stop: int = 200) -> None:
        self._next = start
        self._stop = stop

    def take(self) -> int:
        if self._next > self._stop:
            raise ValueError("payload length range exhausted")
        value = self._next
        self._next += 1
        return value


_OTHER_PEERS = ("SCADA", "P3", "P5", "P6")


def _compose(
    state: str,
    lengths: _LengthAllocator,
    *,
    critical_peers: Tuple[Tuple[str, str], ...],
    p2_count: int,
    other_count: int,
) -> List[Slot]:
    """Lay out one repetition: two P1-P2 pairs, the critical handshakes, the rest.

    Critical slots sit mid-pattern so their delivery completes before the boundary.
    """

    plan: List[Tuple[str, str, str, bool]] = []

    def pairs(peer: str, count: int, label: str) -> List[Tuple[str, str, str, bool]]:
        out: List[Tuple[str, str, str, bool]] = []
        for i in range(count // 2):
            out.append(("P1", peer, f"{label}_req{i}", False))
            out.append((peer, "P1", f"{label}_resp{i}", False))
        if count % 2:
            out.append((peer, "P1", f"{label}_push", False))
        return out

    p2_slots = pairs("P2", p2_count, "p2_status")
    plan.extend(p2_slots[:4])
    for peer, kind in critical_peers:
        plan.append(("P1", peer, f"{kind}_req", True))
        plan.append((peer, "P1", kind, True))
    plan.extend(p2_slots[4:])
    for i in range(other_count // 2):
        peer = _OTHER_PEERS[i % len(_OTHER_PEERS)]
        plan.append(("P1", peer, f"report_req{i}", False))
        plan.append((peer, "P1", f"report_ack{i}", False))
    if other_count % 2:
        plan.append(("P1", "SCADA", "report_push", False))

    return [
        Slot(
            index=i,
            src=src,
            dst=dst,
            direction="request" if src == "P1" else "response",
            payload_length=lengths.take(),
            kind=f"{state}.{kind}",
            critical_in_final_repetition=critical,
        )
        for i, (src, dst, kind, critical) in enumerate(plan)
    ]


def build_swat_schedules(config: PlantConfig) -> Dict[str, MessageSchedule]:
    """P1's schedules: 26/30/32 slots with 6/2/2 criticals and 10/14/15 P1-P2 slots."""

    lengths = _LengthAllocator()
    gap = int(round(config.intra_slot_gap_ms * US_PER_MS))
    rep_gap = int(round(config.repetition_gap_ms * US_PER_MS))
    layouts = {
        "S11": (
            (("P2", "ready"), ("P3", "ready"), ("P4", "ready")),
            10,
            10,
            config.s11_repetitions,
        ),
        "S12": ((("P2", "supply_grant"),), 14, 14, config.s12_repetitions),
        "S13": ((("P2", "batch_done"),), 15, 15, config.s13_repetitions),
    }
    schedules: Dict[str, MessageSchedule] = {}
    for state, (critical_peers, p2_count, other_count, reps) in layouts.items():
        slots = _compose(state, lengths, critical_peers=critical_peers, p2_count=p2_count, other_count=other_count)
        schedules[state] = MessageSchedule(state, tuple(slots), reps, gap, rep_gap)
    return schedules


__all__ = [
    "ADDRESSES",
    "CYCLE_END",
    "MessageSchedule",
    "P1_STATES",
    "P2_STATES",
    "PlantConfig",
    "Slot",
    "build_swat_schedules",
]
