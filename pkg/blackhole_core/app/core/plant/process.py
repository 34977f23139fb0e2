"""The SWaT-like plant wired onto the simulation clock.

P1 drives the message schedule; P2 follows it and leaves S22 on P1's supply request.
P3-P6 are folded into one consumer that draws T2 and fills the output tank.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ....runtime.scheduler import EventScheduler, US_PER_S, seconds
from ..simkernel.links import LinkModel
from ..wire.capture import AppMessage, Tap
from ..wire.transport import Transport, TransportConfig
from ..metrics import plc_transitions_total
from .config import ADDRESSES, CYCLE_END, P1_STATES, P2_STATES, MessageSchedule, PlantConfig, Slot, build_swat_schedules
from .plc import Inbox, LastValueStore, SubProcessState, TransitionGuard, plc_step, tolerate_delay
from .tanks import FlowRates, Hydraulics, TankState, integrate_physics, publish_levels

logger = logging.getLogger(__name__)

LOG_FIELDS: Tuple[str, ...] = (
    "P1_STATE",
    "P2_STATE",
    "P36_STATE",
    "MV101",
    "P101",
    "LIT101",
    "FIT101",
    "LSH101",
    "LSHH101",
    "P1_PEERS_READY",
    "P1_VIEW_P2_STATE",
    "LIT201",
    "P201",
    "AIT201",
    "AIT202",
    "AIT203",
    "FIT301",
    "LIT601",
    "P601",
    "SCADA_MODE",
    "LSHH201",
)

READY_PEERS = ("P2", "P3", "P4")
_SNAP_TOLERANCE = 1e-3


@dataclass(frozen=True)
class LogEntry:
    t_s: float
    values: Tuple[object, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(LOG_FIELDS):
            raise ValueError(f"log entry needs {len(LOG_FIELDS)} fields, got {len(self.values)}")

    def __getitem__(self, name: str) -> object:
        return self.values[LOG_FIELDS.index(name)]


@dataclass(frozen=True)
class TransitionRecord:
    time: int
    plc: str
    source: str
    target: str
    repetitions: int


class Plant:
    """Owns the links, the tap, the transport and every PLC of one simulation."""

    def __init__(
        self,
        config: PlantConfig,
        scheduler: EventScheduler,
        *,
        tap: Optional[Tap] = None,
        transport_config: Optional[TransportConfig] = None,
    ) -> None:
        self.config = config
        self.scheduler = scheduler
        self.schedules: Dict[str, MessageSchedule] = build_swat_schedules(config)
        self.tap = tap or Tap(start=scheduler.now)
        self.links: Dict[Tuple[str, str], LinkModel] = {}
        latency = int(round(config.link_latency_ms * 1000))
        for schedule in self.schedules.values():
            for slot in schedule.slots:
                key = (ADDRESSES[slot.src], ADDRESSES[slot.dst])
                if key not in self.links:
                    self.links[key] = LinkModel(key[0], key[1], base_latency=latency)
        self.transport = Transport(
            scheduler,
            self.links,
            ADDRESSES,
            self.tap,
            config=transport_config,
            on_deliver=self._on_deliver,
            on_lost=self._on_lost,
        )
        delta_t = seconds(config.delta_t_s)
        guards = {
            "S11": [TransitionGuard("S12", delta_t, frozenset(self.schedules["S11"].critical_slots))],
            "S12": [
                TransitionGuard(
                    "S13",
                    delta_t,
                    frozenset(self.schedules["S12"].critical_slots),
                    sensor=lambda sensors: sensors["LIT101"] >= config.functional_max_level - _SNAP_TOLERANCE,
                )
            ],
            "S13": [TransitionGuard(CYCLE_END, delta_t, frozenset(self.schedules["S13"].critical_slots))],
        }
        self.p1 = SubProcessState("P1", "S11", P1_STATES, guards=guards)
        self.supply_request_slot = next(
            slot.index for slot in self.schedules["S12"].slots if slot.critical_in_final_repetition and slot.dst == "P2"
        )
        self.p2 = SubProcessState(
            "P2",
            "S21",
            P2_STATES,
            guards={"S22": [TransitionGuard("S23", delta_t, frozenset({self.supply_request_slot}))]},
        )
        self.inbox = Inbox()
        self.p2_inbox = Inbox()
        self.view = LastValueStore(
            defaults={"p2_state": "S21", **{f"ready_{peer}": False for peer in READY_PEERS}}
        )
        self.hydraulics = self._fresh_hydraulics()
        self.log: List[LogEntry] = []
        self.transitions: List[TransitionRecord] = []
        self.emitted: Counter[str] = Counter()
        self.cycle_starts: List[int] = []
        self.cycle_ends: List[int] = []
        self.t2_full_times: List[int] = []
        self.coordination_lost_at: List[int] = []
        self.p1_active = False
        self._epoch = 0
        self._cycle_started_at = scheduler.now
        self._last_physics = scheduler.now
        self._p2_deadline_armed = False
        self._horizon = scheduler.now
        self._next_tick = scheduler.now
        self._tick_pending = False

    @property
    def p2_state(self) -> str:
        return self.p2.current_state

    # ------------------------------------------------------------------
    # Driving the simulation
    # ------------------------------------------------------------------
    def schedule_cycles(self, first_start: int, count: int) -> List[int]:
        starts = [first_start + k * self.config.cycle_period for k in range(count)]
        for start in starts:
            self.scheduler.schedule(start, self._start_cycle, "cycle_start")
        return starts

    def run_until(self, t_end: int) -> int:
        """Advance the clock to ``t_end``; log entries are taken at every period before it."""

        self._horizon = max(self._horizon, t_end)
        if not self._tick_pending and self._next_tick < self._horizon:
            self._tick_pending = True
            self.scheduler.schedule(self._next_tick, self._tick, "physics_tick")
        dispatched = self.scheduler.run_until(t_end)
        self._advance(t_end)
        return dispatched

    # ------------------------------------------------------------------
    # Cycles and P1's repetitions
    # ------------------------------------------------------------------
    def _fresh_hydraulics(self) -> Hydraulics:
        cfg = self.config
        return Hydraulics(
            t1=TankState(cfg.t1_initial_level, cfg.tank_capacity_level),
            t2=TankState(0.0, cfg.t2_capacity_level),
            output=TankState(0.0, float("inf")),
            rates=FlowRates(
                inflow_rate=cfg.inflow_rate,
                outflow_rate=cfg.outflow_rate,
                consumer_rate=cfg.consumer_rate,
                output_rate=cfg.output_rate,
                treatment_latency_s=cfg.treatment_latency_s,
            ),
            clock_s=self.scheduler.now / US_PER_S,
        )

    def _start_cycle(self) -> None:
        now = self.scheduler.now
        self._advance(now)
        self._epoch += 1
        self._cycle_started_at = now
        self.cycle_starts.append(now)
        self.hydraulics = self._fresh_hydraulics()
        self._set_p2("S21")
        self.p1.enter("S11")
        self.inbox.clear()
        self.p2_inbox.clear()
        self.view.reset()
        self._p2_deadline_armed = False
        self.p1_active = True
        logger.info("cycle %s starts at t=%.3fs", len(self.cycle_starts), now / US_PER_S)
        epoch = self._epoch
        self.scheduler.schedule_in(
            seconds(self.config.p2_ready_after_s), lambda: self._p2_ready(epoch), "p2_ready"
        )
        self._p1_iteration(epoch)

    def _end_cycle(self) -> None:
        now = self.scheduler.now
        self.p1_active = False
        self.hydraulics.t1.valve_open = False
        self.hydraulics.t1.pump_on = False
        self.hydraulics.consumer_running = False
        self._set_p2("S21")
        self.cycle_ends.append(now)
        logger.info("cycle %s ends at t=%.3fs", len(self.cycle_starts), now / US_PER_S)

    def _p1_iteration(self, epoch: int) -> None:
        if epoch != self._epoch:
            return
        now = self.scheduler.now
        self._advance(now)
        before = self.p1.repetition_counter
        result = plc_step(self.p1, self.schedules, self.inbox, self._sensors(), now)
        if result.transition is not None:
            source, target = result.transition
            self.transitions.append(TransitionRecord(now, "P1", source, target, before))
            if target == CYCLE_END:
                self._end_cycle()
                return
            self._enter_p1_state(target, epoch)
        else:
            logger.debug("P1 %s repetition %s", self.p1.current_state, result.repetition)
        self._emit(result.slots, 0, result.repetition, epoch)

    def _emit(self, slots: Sequence[Slot], index: int, repetition: int, epoch: int) -> None:
        if epoch != self._epoch:
            return
        now = self.scheduler.now
        state = self.p1.current_state
        schedule = self.schedules[state]
        slot = slots[index]
        final = repetition >= schedule.repetitions_before_transition
        msg = AppMessage(
            src=slot.src,
            dst=slot.dst,
            payload_length=slot.payload_length,
            kind=slot.kind,
            critical=slot.critical_in_final_repetition and final,
            emit_time=now,
            state=state,
            repetition=repetition,
            slot_index=slot.index,
            value=self._content(slot, final),
        )
        self.transport.transmit(msg)
        self.emitted[state] += 1
        if index + 1 < len(slots):
            self.scheduler.schedule_in(
                schedule.intra_slot_gap, lambda: self._emit(slots, index + 1, repetition, epoch), "emit"
            )
        else:
            self.scheduler.schedule_in(schedule.repetition_gap, lambda: self._p1_iteration(epoch), "p1_step")

    def _content(self, slot: Slot, final: bool) -> object:
        kind = slot.kind.split(".", 1)[1]
        if kind == "ready":
            return final
        if slot.src == "P2" and kind.startswith("p2_status"):
            return self.p2_state
        return None

    def _on_deliver(self, msg: AppMessage, at: int) -> None:
        if msg.emit_time < self._cycle_started_at or not self.p1_active:
            return
        kind = msg.kind.split(".", 1)[1]
        if msg.critical and msg.state == self.p1.current_state:
            self.inbox.record(msg.slot_index, msg.repetition, msg.emit_time, at)
        if msg.dst == "P2" and msg.state == "S12":
            self._p2_receive(msg, at)
        if msg.dst != "P1":
            return
        if kind == "ready":
            self.view.update(f"ready_{msg.src}", msg.value, at)
        elif msg.src == "P2" and kind.startswith("p2_status"):
            self.view.update("p2_state", msg.value, at)

    def _on_lost(self, msg: AppMessage, at: int) -> None:
        if msg.emit_time < self._cycle_started_at or not self.p1_active or msg.dst != "P1":
            return
        kind = msg.kind.split(".", 1)[1]
        if kind == "ready":
            self.view.record_loss(f"ready_{msg.src}", at)
        elif msg.src == "P2" and kind.startswith("p2_status"):
            self.view.record_loss("p2_state", at)

    # ------------------------------------------------------------------
    # Actuators and level switches
    # ------------------------------------------------------------------
    def _enter_p1_state(self, state: str, epoch: int) -> None:
        t1 = self.hydraulics.t1
        cfg = self.config
        if state == "S12":
            t1.valve_open = True
            t1.pump_on = False
            remaining = (cfg.functional_max_level - t1.level) / cfg.inflow_rate
            if remaining <= 0:
                t1.valve_open = False
            else:
                self.scheduler.schedule_in(seconds(remaining), lambda: self._t1_interlock(epoch), "lsh101")
        elif state == "S13":
            t1.valve_open = True
            t1.pump_on = True
            self._schedule_t2_switch(epoch)

    def _t1_interlock(self, epoch: int) -> None:
        if epoch != self._epoch or self.p1.current_state != "S12":
            return
        self._advance(self.scheduler.now)
        t1 = self.hydraulics.t1
        if abs(t1.level - self.config.functional_max_level) < _SNAP_TOLERANCE:
            t1.level = self.config.functional_max_level
        t1.valve_open = False
        logger.debug("LSH101 closes MV101 at %.1f cm", t1.level)

    def _schedule_t2_switch(self, epoch: int) -> None:
        h = self.hydraulics
        if h.pump_flow() <= 0:
            return
        remaining = (self.config.t2_full_level - h.t2.level) / h.pump_flow()
        self.scheduler.schedule_in(seconds(max(remaining, 0.0)), lambda: self._t2_full(epoch), "lsh201")

    def _t2_full(self, epoch: int) -> None:
        """LSH201: T2 reached its full mark; the consumer starts if P2 is processing."""

        if epoch != self._epoch:
            return
        self._advance(self.scheduler.now)
        h = self.hydraulics
        full = self.config.t2_full_level
        if h.t2.level < full - _SNAP_TOLERANCE:
            return
        if h.t2.level - full < _SNAP_TOLERANCE:
            h.t2.level = full
        self.t2_full_times.append(self.scheduler.now)
        if self.p2_state == "S23":
            h.consumer_running = True

    def _p2_ready(self, epoch: int) -> None:
        if epoch == self._epoch and self.p2_state == "S21" and self.p1_active:
            self._set_p2("S22")

    def _p2_receive(self, msg: AppMessage, at: int) -> None:
        """P2's side of S12: wait for the supply request of P1's final repetition."""

        schedule = self.schedules["S12"]
        if not self._p2_deadline_armed:
            self._p2_deadline_armed = True
            expected = at + schedule.repetitions_before_transition * schedule.repetition_span()
            deadline = expected + seconds(self.config.p2_coordination_tolerance_s)
            epoch = self._epoch
            self.scheduler.schedule(deadline, lambda: self._p2_deadline(epoch), "p2_deadline")
        if not msg.critical or self.p2_state != "S22":
            return
        self.p2_inbox.record(msg.slot_index, msg.repetition, msg.emit_time, at)
        for guard in self.p2.guards.get("S22", ()):
            if guard.satisfied(self.p2_inbox, self._sensors(), schedule.repetitions_before_transition):
                self._set_p2(guard.target_state)
                break

    def _p2_deadline(self, epoch: int) -> None:
        if epoch != self._epoch or self.p2_state != "S22":
            return
        now = self.scheduler.now
        self._advance(now)
        self.hydraulics.t2_inlet_open = False
        self.coordination_lost_at.append(now)
        logger.warning(
            "P2 got no supply request within %.0fs of its expected time; inlet closed for the cycle",
            self.config.p2_coordination_tolerance_s,
        )

    def _set_p2(self, state: str) -> None:
        source = self.p2_state
        if state == source:
            return
        now = self.scheduler.now
        self.transitions.append(TransitionRecord(now, "P2", source, state, 0))
        plc_transitions_total.labels(plc="P2", source=source, target=state).inc()
        logger.info("P2 %s -> %s at t=%.3fs", source, state, now / US_PER_S)
        self.p2.enter(state)
        self.p2_inbox.clear()

    # ------------------------------------------------------------------
    # Physics and logging
    # ------------------------------------------------------------------
    def _advance(self, now: int) -> None:
        if now > self._last_physics:
            integrate_physics(self.hydraulics, (now - self._last_physics) / US_PER_S)
            self._last_physics = now

    def _tick(self) -> None:
        now = self.scheduler.now
        self._advance(now)
        publish_levels(self.hydraulics)
        self.log.append(self.log_snapshot(now))
        self._next_tick = now + seconds(self.config.log_period_s)
        if self._next_tick < self._horizon:
            self.scheduler.schedule(self._next_tick, self._tick, "physics_tick")
        else:
            self._tick_pending = False

    def _sensors(self) -> Dict[str, float]:
        h = self.hydraulics
        return {"LIT101": h.t1.level, "LIT201": h.t2.level, "LIT601": h.output.level}

    def log_snapshot(self, now: int) -> LogEntry:
        self._advance(now)
        h = self.hydraulics
        cfg = self.config
        lit101 = round(h.t1.level, 3)
        ready = all(tolerate_delay(self.view, f"ready_{peer}", now) for peer in READY_PEERS)
        output_flowing = h.consumer_running and h.consumer_elapsed_s > h.rates.treatment_latency_s
        values = (
            self.p1.current_state,
            self.p2_state,
            "RUN" if h.consumer_running else "IDLE",
            "Open" if h.t1.valve_open else "Closed",
            "On" if h.t1.pump_on else "Off",
            lit101,
            h.inflow(),
            int(lit101 >= cfg.functional_max_level),
            int(h.t1.overflowed),
            int(ready),
            tolerate_delay(self.view, "p2_state", now),
            round(h.t2.level, 3),
            "On" if self.p2_state == "S23" else "Off",
            cfg.ait201_us_cm,
            cfg.ait202_ph,
            cfg.ait203_mv,
            cfg.consumer_rate if h.consumer_running else 0.0,
            round(h.output.level, 3),
            "On" if output_flowing else "Off",
            "AUTO" if self.p1_active else "STANDBY",
            int(h.t2.overflowed),
        )
        return LogEntry(round(now / US_PER_S, 6), values)

    def output_volume(self, now: Optional[int] = None) -> float:
        """Level of the downstream output tank in cm."""

        clock = self.scheduler.now
        self._advance(clock if now is None else min(now, clock))
        return self.hydraulics.output.level

    def levels(self) -> List[Tuple[float, float, float, float]]:
        return [(entry.t_s, entry["LIT101"], entry["LIT201"], entry["LIT601"]) for entry in self.log]  # type: ignore[misc]

    def p1_transitions(self) -> List[TransitionRecord]:
        return [record for record in self.transitions if record.plc == "P1"]


__all__ = ["LOG_FIELDS", "LogEntry", "Plant", "READY_PEERS", "TransitionRecord"]
