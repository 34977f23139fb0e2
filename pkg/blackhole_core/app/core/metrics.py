"""Prometheus metrics for the plant/network simulation."""
from __future__ import annotations

from ..compat.prom import Counter, Gauge

events_dispatched_total = Counter(
    "blackhole_events_dispatched_total",
    "Simulation events dispatched by the scheduler",
)
packets_captured_total = Counter(
    "blackhole_packets_captured_total",
    "Packets recorded by the mirror tap",
    labelnames=("retx",),
)
packets_dropped_total = Counter(
    "blackhole_packets_dropped_total",
    "Packets dropped on a link",
    labelnames=("reason",),
)
plc_transitions_total = Counter(
    "blackhole_plc_transitions_total",
    "PLC state transitions",
    labelnames=("plc", "source", "target"),
)
attack_activations_total = Counter(
    "blackhole_attack_activations_total",
    "Drop rules installed by the adversary",
    labelnames=("state",),
)
detector_flags_total = Counter(
    "blackhole_detector_flags_total",
    "Verdicts flagged as anomalous",
    labelnames=("detector",),
)
tank_level_cm = Gauge(
    "blackhole_tank_level_cm",
    "Most recent simulated tank level",
    labelnames=("tank",),
)

