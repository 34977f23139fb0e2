"""Scenario pipelines: plant runs, the sniper's two phases and the detector sweep."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ....runtime.scheduler import EventScheduler, SeededRng, US_PER_MS, US_PER_S, seconds
from ...core.detectors import (
    Evaluation,
    Verdict,
    detano_detect,
    detano_train,
    evaluate,
    nnd_detect,
    nnd_train,
    pad_check,
    pad_mine,
    tile,
)
from ...core.errors import ConfigError
from ...core.plant import LogEntry, Plant, TransitionRecord
from ...core.simkernel.links import FluctuationWindow, inject_fluctuations
from ...core.sniper import AttackReport, IdMap, Lts, Sniper, SniperProfile, build_profile, read_lts_csv
from ...core.sniper.profiling import read_id_map_csv
from ...core.wire.capture import CaptureTrace, PacketMeta
from ...core.wire.transport import TransportConfig
from .config import ScenarioConfig

logger = logging.getLogger(__name__)

# attack name -> (LTS state index, P1 state it stands for)
ATTACKS: Dict[str, Tuple[int, str]] = {
    "process-delay": (0, "S11"),
    "tank-overflow": (1, "S12"),
}
DETECTOR_HEADER = ("detector", "window_size_s", "attack", "drop_duration_s", "tpr", "fpr", "delay_s")

Metric = Tuple[str, object]


@dataclass(frozen=True)
class DetectorRow:
    detector: str
    window_size_s: float
    attack: str
    drop_duration_s: float
    tpr: float
    fpr: float
    delay_s: Optional[float]

    def as_tuple(self) -> Tuple[object, ...]:
        return (self.detector, self.window_size_s, self.attack, self.drop_duration_s, self.tpr, self.fpr, self.delay_s)


@dataclass
class ProfileRun:
    """Three benign cycles and what the sniper learned from them."""

    plant: Plant
    profile: SniperProfile
    horizon: int
    fluctuations: List[FluctuationWindow] = field(default_factory=list)


@dataclass
class AttackRun:
    name: str
    plant: Plant
    report: AttackReport
    horizon: int
    drop_duration_s: float

    @property
    def interval(self) -> Optional[Tuple[int, int]]:
        if self.report.signal_time is None:
            return None
        return self.report.signal_time, self.report.signal_time + seconds(self.drop_duration_s)

    @property
    def drop_times(self) -> List[int]:
        return [pkt.capture_time for pkt in self.report.dropped]


@dataclass
class ExperimentReport:
    config: ScenarioConfig
    metrics: List[Metric] = field(default_factory=list)
    trace: Optional[CaptureTrace] = None
    log: List[LogEntry] = field(default_factory=list)
    lts: Optional[Lts] = None
    id_map: Optional[IdMap] = None
    detector_rows: List[DetectorRow] = field(default_factory=list)

    @property
    def scenario(self) -> str:
        return self.config.scenario

    @property
    def provenance(self) -> List[Metric]:
        return [
            ("seed", self.config.seed),
            ("rng", SeededRng.algorithm),
            ("config_hash", self.config.config_hash()),
        ]

    def metric(self, key: str) -> object:
        for name, value in self.metrics:
            if name == key:
                return value
        raise KeyError(key)

    def rows(self) -> List[Metric]:
        echo: List[Metric] = [("scenario", self.scenario)]
        if self.scenario in ATTACKS or self.scenario == "detector-sweep":
            echo.append(("drop_duration_s", self.config.drop_duration_s))
        return echo + self.metrics + self.provenance

    def levels(self) -> List[Tuple[float, float, float, float]]:
        return [(entry.t_s, entry["LIT101"], entry["LIT201"], entry["LIT601"]) for entry in self.log]  # type: ignore[misc]


# ----------------------------------------------------------------------
# Building blocks
# ----------------------------------------------------------------------
def _new_plant(config: ScenarioConfig) -> Plant:
    transport = TransportConfig(
        rto=int(round(config.rto_ms * US_PER_MS)),
        max_retries=config.max_retries,
        overhead=config.overhead_bytes,
    )
    return Plant(config.plant_config(), EventScheduler(), transport_config=transport)


def _inject(plant: Plant, config: ScenarioConfig, rng: SeededRng, cycle_start: int) -> List[FluctuationWindow]:
    span = (
        cycle_start + seconds(config.fluctuation_span_start_s),
        cycle_start + seconds(config.fluctuation_span_end_s),
    )
    windows: List[FluctuationWindow] = []
    for src, dst in sorted(plant.links):
        windows.extend(
            inject_fluctuations(
                plant.links[(src, dst)],
                span,
                rng.child(f"{src}->{dst}@{cycle_start}"),
                count=config.fluctuations_per_link,
                min_duration_s=config.fluctuation_min_s,
                max_duration_s=config.fluctuation_max_s,
                extra_delay=int(round(config.fluctuation_extra_delay_ms * US_PER_MS)),
            )
        )
    logger.info("injected %s benign fluctuation windows on %s links", len(windows), len(plant.links))
    return windows


def _finish(plant: Plant, horizon: int) -> None:
    plant.run_until(horizon)
    plant.tap.close(horizon)


def _first_transition(
    records: Sequence[TransitionRecord], plc: str, source: str, target: Optional[str] = None
) -> Optional[int]:
    for record in records:
        if record.plc == plc and record.source == source and target in (None, record.target):
            return record.time
    return None


def _first(times: Sequence[int]) -> Optional[int]:
    return times[0] if times else None


def _seconds_or_none(value: Optional[int]) -> Optional[float]:
    return None if value is None else value / US_PER_S


def _delta_s(attacked: Optional[int], baseline: Optional[int]) -> Optional[float]:
    if attacked is None or baseline is None:
        return None
    return (attacked - baseline) / US_PER_S


def _max_level(log: Sequence[LogEntry], field_name: str) -> float:
    return max((float(entry[field_name]) for entry in log), default=0.0)  # type: ignore[arg-type]


# ----------------------------------------------------------------------
# Runs
# ----------------------------------------------------------------------
def run_benign(config: ScenarioConfig, *, fluctuations: bool = False, label: str = "benign") -> Plant:
    """One attack-length run with the cycle starting at t = 0."""

    plant = _new_plant(config)
    plant.schedule_cycles(0, 1)
    if fluctuations and config.fluctuations_per_link:
        _inject(plant, config, SeededRng(config.seed).child(label), 0)
    _finish(plant, seconds(config.attack_run_s))
    return plant


def run_profile(config: ScenarioConfig) -> ProfileRun:
    """Capture ``profile_cycles`` complete cycles and run the passive phase on the tap."""

    plant = _new_plant(config)
    starts = plant.schedule_cycles(seconds(config.first_cycle_offset_s), config.profile_cycles)
    fluctuations: List[FluctuationWindow] = []
    if config.fluctuation_cycle and config.fluctuations_per_link:
        cycle_start = starts[config.fluctuation_cycle - 1]
        fluctuations = _inject(plant, config, SeededRng(config.seed).child("profile"), cycle_start)
    horizon = seconds(config.first_cycle_offset_s) + config.profile_cycles * plant.config.cycle_period
    _finish(plant, horizon)
    profile = build_profile(plant.tap.trace, k=config.gap_factor)
    return ProfileRun(plant, profile, horizon, fluctuations)


def load_profile(directory: Path) -> Tuple[List[Lts], IdMap]:
    directory = Path(directory)
    lts_path = directory / "lts.csv"
    id_map_path = directory / "id_map.csv"
    for path in (lts_path, id_map_path):
        if not path.is_file():
            raise ConfigError(f"profile artifact {path} not found")
    return [read_lts_csv(lts_path)], read_id_map_csv(id_map_path)


def run_attack(
    config: ScenarioConfig,
    name: str,
    candidates: Sequence[Lts],
    id_map: IdMap,
) -> AttackRun:
    """Attack the first cycle: follow it live and blackhole the target state's final repetition."""

    target, label = ATTACKS[name]
    plant = _new_plant(config)
    plant.schedule_cycles(0, 1)
    sniper = Sniper(
        candidates,
        id_map,
        target,
        config.drop_duration_s,
        links=plant.links,
        scheduler=plant.scheduler,
        tap=plant.tap,
        gap_factor=config.gap_factor,
    )
    sniper.attach()
    horizon = seconds(config.attack_run_s)
    _finish(plant, horizon)
    repetitions = plant.schedules[label].repetitions_before_transition
    report = sniper.report(state_label=label, repetition=repetitions)
    if report.signal_time is None:
        logger.warning("%s: the sniper never signaled (%s)", name, report.tracking_lost or "target not reached")
    return AttackRun(name, plant, report, horizon, config.drop_duration_s)


def _attack_metrics(run: AttackRun, baseline: Plant) -> List[Metric]:
    _, label = ATTACKS[run.name]
    plant = run.plant
    report = run.report
    horizon = run.horizon
    base_output = baseline.output_volume(horizon)
    output = plant.output_volume(horizon)
    reduction = (base_output - output) / base_output * 100.0 if base_output > 0 else None
    h = plant.hydraulics
    return [
        ("signal_time_s", _seconds_or_none(report.signal_time)),
        ("tracking_lost", report.tracking_lost),
        ("dropped_packets", len(report.dropped)),
        ("recall", report.recall),
        ("precision", report.precision),
        ("deviated", report.deviated),
        ("first_divergence_s", _seconds_or_none(report.first_divergence_time)),
        (
            "transition_delay_s",
            _delta_s(
                _first_transition(plant.transitions, "P1", label),
                _first_transition(baseline.transitions, "P1", label),
            ),
        ),
        (
            "p2_transition_delay_s",
            _delta_s(
                _first_transition(plant.transitions, "P2", "S22", "S23"),
                _first_transition(baseline.transitions, "P2", "S22", "S23"),
            ),
        ),
        ("fill_delay_s", _delta_s(_first(plant.t2_full_times), _first(baseline.t2_full_times))),
        ("coordination_lost_s", _seconds_or_none(_first(plant.coordination_lost_at))),
        ("output_level_cm", output),
        ("baseline_output_level_cm", base_output),
        ("output_reduction_pct", reduction),
        ("max_t1_level_cm", _max_level(plant.log, "LIT101")),
        ("overflow", h.t1.overflowed),
        ("overflow_onset_s", h.overflow_onset_s),
    ]


# ----------------------------------------------------------------------
# Detector sweep
# ----------------------------------------------------------------------
@dataclass
class _Observed:
    attack: str
    drop_duration_s: float
    packets: List[PacketMeta]
    log: List[LogEntry]
    horizon: int
    interval: Optional[Tuple[int, int]]
    drop_times: List[int]


def _row(detector: str, size_s: float, run: _Observed, result: Evaluation) -> DetectorRow:
    return DetectorRow(
        detector,
        size_s,
        run.attack,
        run.drop_duration_s,
        result.tpr,
        result.fpr,
        result.delay_s if run.interval is not None else None,
    )


def _score(run: _Observed, verdicts: Sequence[Verdict]) -> Evaluation:
    interval = run.interval or (run.horizon, run.horizon)
    return evaluate(verdicts, interval, drop_times=run.drop_times)


def detector_sweep(
    config: ScenarioConfig,
    profile_run: ProfileRun,
    benign: Plant,
    attacks: Sequence[AttackRun],
) -> List[DetectorRow]:
    """Train on the profiling capture, then score the held-out benign run and every attack run."""

    training = profile_run.plant.tap.trace.forwarded()
    runs = [_Observed("none", 0.0, benign.tap.trace.forwarded(), benign.log, seconds(config.attack_run_s), None, [])]
    for attack in attacks:
        runs.append(
            _Observed(
                attack.name,
                attack.drop_duration_s,
                attack.plant.tap.trace.forwarded(),
                attack.plant.log,
                attack.horizon,
                attack.interval,
                attack.drop_times,
            )
        )

    rows: List[DetectorRow] = []
    for size_s in config.window_sizes_s:
        train_windows = tile(0, profile_run.horizon, size_s)
        nnd = nnd_train(training, train_windows, safety_factor=config.nnd_safety_factor)
        detano = detano_train(training, train_windows, tolerance=config.detano_tolerance)
        for run in runs:
            windows = tile(0, run.horizon, size_s)
            rows.append(_row("nnd", size_s, run, _score(run, nnd_detect(nnd, run.packets, windows))))
            rows.append(_row("detano", size_s, run, _score(run, detano_detect(detano, run.packets, windows))))
        logger.debug("window %ss scored on %s runs", size_s, len(runs))

    period = profile_run.plant.config.log_period_s
    invariants = pad_mine(profile_run.plant.log, min_support=config.pad_min_support)
    for run in runs:
        rows.append(_row("pad", period, run, _score(run, pad_check(invariants, run.log, period_s=period))))
    logger.info("detector sweep: %s rows over %s runs", len(rows), len(runs))
    return rows


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------
def _profile_metrics(run: ProfileRun) -> List[Metric]:
    profile = run.profile
    lts = profile.lts
    trace = run.plant.tap.trace
    return [
        ("cycles", profile.cycles),
        ("packets_captured", len(trace)),
        ("retransmissions", sum(1 for pkt in trace.packets if pkt.retx)),
        ("messages_lost", run.plant.transport.lost),
        ("fluctuation_windows", len(run.fluctuations)),
        ("metadata_ids", len(profile.id_map)),
        ("lts_states", lts.state_count),
        ("lts_repetitions", ":".join(str(r) for r in lts.repetitions)),
        ("lts_pattern_lengths", ":".join(str(len(p)) for p in lts.patterns)),
        ("lts_candidates", len(profile.candidates)),
        ("lts_reproduces_cycle", lts.reproduces(profile.sequence)),
    ]


def _baseline_metrics(plant: Plant, horizon: int) -> List[Metric]:
    metrics: List[Metric] = []
    for record in plant.p1_transitions():
        metrics.append((f"transition_{record.source}_{record.target}_s", record.time / US_PER_S))
    metrics.extend(
        [
            ("p2_transition_s", _seconds_or_none(_first_transition(plant.transitions, "P2", "S22", "S23"))),
            ("t2_full_s", _seconds_or_none(_first(plant.t2_full_times))),
            ("output_level_cm", plant.output_volume(horizon)),
            ("max_t1_level_cm", _max_level(plant.log, "LIT101")),
            ("overflow", plant.hydraulics.t1.overflowed),
            ("packets_captured", len(plant.tap.trace)),
        ]
    )
    return metrics


def run_scenario(config: ScenarioConfig, *, profile_run: Optional[ProfileRun] = None) -> ExperimentReport:
    """Execute ``config.scenario``; ``profile_run`` reuses an earlier passive phase."""

    logger.info("scenario %s (seed %s) starts", config.scenario, config.seed)
    report = ExperimentReport(config)

    if config.scenario == "baseline":
        plant = run_benign(config)
        report.metrics = _baseline_metrics(plant, seconds(config.attack_run_s))
        report.trace, report.log = plant.tap.trace, plant.log

    elif config.scenario == "profile":
        profile_run = profile_run or run_profile(config)
        report.metrics = _profile_metrics(profile_run)
        report.trace, report.log = profile_run.plant.tap.trace, profile_run.plant.log
        report.lts, report.id_map = profile_run.profile.lts, profile_run.profile.id_map

    elif config.scenario in ATTACKS:
        if profile_run is not None:
            candidates, id_map = profile_run.profile.candidates, profile_run.profile.id_map
        elif config.profile_dir:
            candidates, id_map = load_profile(Path(config.profile_dir))
        else:
            profile_run = run_profile(config)
            candidates, id_map = profile_run.profile.candidates, profile_run.profile.id_map
        attack = run_attack(config, config.scenario, candidates, id_map)
        baseline = run_benign(config, label="baseline")
        report.metrics = _attack_metrics(attack, baseline)
        report.trace, report.log = attack.plant.tap.trace, attack.plant.log
        report.lts, report.id_map = candidates[0], id_map

    else:
        profile_run = profile_run or run_profile(config)
        profile = profile_run.profile
        benign = run_benign(config, fluctuations=config.benign_fluctuations, label="held-out")
        attacks = [run_attack(config, name, profile.candidates, profile.id_map) for name in ATTACKS]
        report.detector_rows = detector_sweep(config, profile_run, benign, attacks)
        report.metrics = [
            ("runs", 1 + len(attacks)),
            ("rows", len(report.detector_rows)),
            ("window_sizes_s", ":".join(f"{size:g}" for size in config.window_sizes_s)),
        ]
        report.trace, report.log = attacks[0].plant.tap.trace, attacks[0].plant.log
        report.lts, report.id_map = profile.lts, profile.id_map

    logger.info("scenario %s finished with %s metrics", config.scenario, len(report.metrics))
    return report


__all__ = [
    "ATTACKS",
    "AttackRun",
    "DETECTOR_HEADER",
    "DetectorRow",
    "ExperimentReport",
    "ProfileRun",
    "detector_sweep",
    "load_profile",
    "run_attack",
    "run_benign",
    "run_profile",
    "run_scenario",
]
