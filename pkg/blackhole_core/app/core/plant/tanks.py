"""Linear tank dynamics for T1 (P1 raw water), T2 (P2 buffer) and the output tank."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..metrics import tank_level_cm


@dataclass
class TankState:
    level: float
    capacity: float = 1000.0
    valve_open: bool = False
    pump_on: bool = False
    overflowed: bool = False

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError("level must be non-negative")


@dataclass
class FlowRates:
    inflow_rate: float = 0.5
    outflow_rate: float = 0.5
    consumer_rate: float = 0.5
    output_rate: float = 0.1
    treatment_latency_s: float = 3800.0


@dataclass
class Hydraulics:
    """Tank set plus the downstream couplings the PLCs act on.

    ``t2_inlet_open`` is P2's inlet: when it is latched closed P101 deadheads and
    nothing leaves T1. ``transferred`` is T2's inflow accumulator.
    """

    t1: TankState
    t2: TankState
    output: TankState
    rates: FlowRates = field(default_factory=FlowRates)
    t2_inlet_open: bool = True
    consumer_running: bool = False
    consumer_elapsed_s: float = 0.0
    clock_s: float = 0.0
    removed_from_t1: float = 0.0
    transferred: float = 0.0
    overflow_onset_s: Optional[float] = None

    def pump_flow(self) -> float:
        if not (self.t1.pump_on and self.t2_inlet_open):
            return 0.0
        return self.rates.outflow_rate

    def inflow(self) -> float:
        return self.rates.inflow_rate if self.t1.valve_open else 0.0


def integrate_tank(tank: TankState, inflow: float, outflow: float, dt: float) -> float:
    """Advance one tank; returns the level actually removed by ``outflow``.

    Gain and loss are netted before touching the level so balanced flows leave it
    bit-identical.
    """

    gained = inflow * dt
    removed = min(outflow * dt, tank.level + gained)
    tank.level = max(0.0, tank.level + (gained - removed))
    if tank.level > tank.capacity:
        tank.overflowed = True
    return removed


def integrate_physics(hydraulics: Hydraulics, dt: float) -> Hydraulics:
    """Advance every tank by ``dt`` seconds with the current actuator settings."""

    if dt <= 0:
        raise ValueError("dt must be positive")
    h = hydraulics
    t1_before = h.t1.level
    t1_was_overflowed = h.t1.overflowed
    moved = integrate_tank(h.t1, h.inflow(), h.pump_flow(), dt)
    h.removed_from_t1 += moved
    h.transferred += moved
    draw = h.rates.consumer_rate if h.consumer_running else 0.0
    integrate_tank(h.t2, moved / dt, draw, dt)

    if h.consumer_running:
        treated_before = max(0.0, h.consumer_elapsed_s - h.rates.treatment_latency_s)
        h.consumer_elapsed_s += dt
        treated_after = max(0.0, h.consumer_elapsed_s - h.rates.treatment_latency_s)
        if treated_after > treated_before:
            integrate_tank(h.output, h.rates.output_rate, 0.0, treated_after - treated_before)

    if h.t1.overflowed and not t1_was_overflowed:
        net = (h.t1.level - t1_before) / dt
        h.overflow_onset_s = h.clock_s + (h.t1.capacity - t1_before) / net if net > 0 else h.clock_s + dt
    h.clock_s += dt
    return h


def publish_levels(hydraulics: Hydraulics) -> None:
    tank_level_cm.labels(tank="T1").set(hydraulics.t1.level)
    tank_level_cm.labels(tank="T2").set(hydraulics.t2.level)
    tank_level_cm.labels(tank="output").set(hydraulics.output.level)


__all__ = ["FlowRates", "Hydraulics", "TankState", "integrate_physics", "integrate_tank", "publish_levels"]
