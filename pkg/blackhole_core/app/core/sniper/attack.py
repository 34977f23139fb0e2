"""Active phase: follow the LTS live, drop the final repetition, check the aftermath."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from ....runtime.scheduler import EventScheduler, seconds
from ..errors import TrackingLostError
from ..metrics import attack_activations_total
from ..simkernel.links import DropRule, LinkModel, MetadataTuple
from ..wire.capture import PacketMeta, Tap
from .lts import Lts
from .profiling import IdMap

logger = logging.getLogger(__name__)

SignalFn = Callable[[int, int], None]


@dataclass
class TrackingState:
    state_index: int = 0
    repetitions_done: int = 0
    offset: int = 0
    lost: Optional[TrackingLostError] = None
    signaled_at: Optional[int] = None


class OnlineTracker:
    """Follows one LTS over the live stream, one unique packet at a time.

    ``on_signal(state_index, time)`` fires when the target state has completed all
    but its last repetition; a state with a single repetition signals on entry.
    With ``gap_factor`` set, a gap longer than that many times the running mean gap
    restarts tracking at state 0, so a capture begun mid-cycle locks on at the next
    cycle.
    """

    def __init__(
        self,
        lts: Lts,
        id_map: IdMap,
        target_state: int,
        *,
        on_signal: Optional[SignalFn] = None,
        gap_factor: Optional[float] = None,
    ) -> None:
        if gap_factor is not None and gap_factor <= 1:
            raise ValueError("gap_factor must be greater than 1")
        if not 0 <= target_state < lts.state_count:
            raise ValueError(f"target state {target_state} outside 0..{lts.state_count - 1}")
        self.lts = lts
        self.id_map = id_map
        self.target_state = target_state
        self.on_signal = on_signal
        self.gap_factor = gap_factor
        self.state = TrackingState()
        self._seen: Set[Tuple[str, str, int]] = set()
        self._last_time: Optional[int] = None
        self._gap_total = 0
        self._gap_count = 0

    @property
    def lost(self) -> bool:
        return self.state.lost is not None

    def feed(self, pkt: PacketMeta) -> None:
        key = (pkt.src, pkt.dst, pkt.seq)
        if key in self._seen:
            return
        self._seen.add(key)
        if self._last_time is not None:
            self._observe_gap(pkt.capture_time - self._last_time)
        self._last_time = pkt.capture_time
        if self.lost or self.state.state_index >= self.lts.state_count:
            return
        st = self.state
        current = self.lts.states[st.state_index]
        metadata_id = self.id_map.lookup(pkt.metadata)
        if metadata_id is None or metadata_id != current.pattern[st.offset]:
            st.lost = TrackingLostError(
                f"tracking lost in state {st.state_index} at offset {st.offset}",
                state_index=st.state_index,
                offset=st.offset,
                time_us=pkt.capture_time,
            )
            logger.info("%s (t=%.3fs)", st.lost, pkt.capture_time / 1e6)
            return
        st.offset += 1
        if st.offset < len(current.pattern):
            return
        st.offset = 0
        st.repetitions_done += 1
        if st.repetitions_done == current.repetitions:
            st.state_index += 1
            st.repetitions_done = 0
            if st.state_index == self.lts.state_count:
                self._restart()
                return
            if st.state_index == self.target_state and self.lts.states[st.state_index].repetitions == 1:
                self._signal(pkt.capture_time)
            return
        if st.state_index == self.target_state and st.repetitions_done == current.repetitions - 1:
            self._signal(pkt.capture_time)

    def _observe_gap(self, gap: int) -> None:
        mean = self._gap_total / self._gap_count if self._gap_count else None
        if self.gap_factor is not None and mean is not None and gap > self.gap_factor * mean:
            logger.debug("idle gap of %.1fs: tracking restarts at state 0", gap / 1e6)
            self._restart()
            self._gap_total = 0
            self._gap_count = 0
            return
        self._gap_total += gap
        self._gap_count += 1

    def _restart(self) -> None:
        lost = self.state.lost
        signaled = self.state.signaled_at
        self.state = TrackingState(signaled_at=signaled)
        if lost is not None:
            logger.debug("tracker restarted after loss: %s", lost)

    def _signal(self, now: int) -> None:
        if self.state.signaled_at is not None:
            return
        self.state.signaled_at = now
        logger.info("penultimate repetition of state %s completed at t=%.3fs", self.target_state, now / 1e6)
        if self.on_signal is not None:
            self.on_signal(self.target_state, now)


class CandidateTracker:
    """Tracks every candidate LTS; the first candidate still on track owns the signal.

    A signal from a later candidate waits while an earlier one is on track and is
    released once every earlier candidate has lost tracking, provided its own tracker
    is still inside the target state.
    """

    def __init__(
        self,
        candidates: Sequence[Lts],
        id_map: IdMap,
        target_pattern: Sequence[int],
        *,
        on_signal: Optional[Callable[[Lts, int, int], None]] = None,
        gap_factor: Optional[float] = None,
    ) -> None:
        self.on_signal = on_signal
        self.fired: Optional[Tuple[Lts, int, int]] = None
        self.trackers: List[Tuple[Lts, OnlineTracker]] = []
        self.pending: Dict[int, int] = {}
        for lts in candidates:
            index = lts.index_of(target_pattern)
            if index is None:
                continue
            tracker = OnlineTracker(
                lts,
                id_map,
                index,
                on_signal=lambda state, now, slot=len(self.trackers): self._candidate_signal(slot, state, now),
                gap_factor=gap_factor,
            )
            self.trackers.append((lts, tracker))
        if not self.trackers:
            raise ValueError("no candidate LTS contains the target pattern")

    def feed(self, pkt: PacketMeta) -> None:
        for _, tracker in self.trackers:
            tracker.feed(pkt)
        if self.fired is None and self.pending:
            self._release(pkt.capture_time)

    def _candidate_signal(self, slot: int, state: int, now: int) -> None:
        if self.fired is not None:
            return
        self.pending[slot] = state
        self._release(now)

    def _release(self, now: int) -> None:
        for slot, (lts, tracker) in enumerate(self.trackers):
            if tracker.lost:
                self.pending.pop(slot, None)
                continue
            state = self.pending.get(slot)
            if state is None:
                return
            if tracker.state.state_index != state:
                del self.pending[slot]
                return
            self.fired = (lts, state, now)
            self.pending.clear()
            if self.on_signal is not None:
                self.on_signal(lts, state, now)
            return


def track_online(
    lts: Lts,
    id_map: IdMap,
    packets: Iterable[PacketMeta],
    target_state: int,
    *,
    gap_factor: Optional[float] = None,
) -> TrackingState:
    """Replay ``packets`` through a tracker; raises if tracking is lost before the signal.

    With ``gap_factor`` a loss can be recovered at the next cycle start, so only a loss
    still standing at the end of the stream raises.
    """

    tracker = OnlineTracker(lts, id_map, target_state, gap_factor=gap_factor)
    for pkt in packets:
        tracker.feed(pkt)
        if gap_factor is None and tracker.lost and tracker.state.signaled_at is None:
            raise tracker.state.lost  # type: ignore[misc]
    if tracker.lost and tracker.state.signaled_at is None:
        raise tracker.state.lost  # type: ignore[misc]
    return tracker.state


def match_set(lts: Lts, id_map: IdMap, state_index: int) -> FrozenSet[MetadataTuple]:
    return frozenset(id_map.tuple_of(i) for i in lts.states[state_index].pattern)


@dataclass
class DropHandle:
    rule: Optional[DropRule]
    tap: Tap
    links: List[LinkModel] = field(default_factory=list)

    def dropped_packets(self) -> List[PacketMeta]:
        if self.rule is None:
            return []
        return [pkt for pkt in self.tap.trace.packets if pkt.dropped_by_adversary]


def execute_drop(
    rule: DropRule,
    duration_s: float,
    *,
    links: Dict[Tuple[str, str], LinkModel],
    scheduler: EventScheduler,
    tap: Tap,
) -> DropHandle:
    """Install ``rule`` on every link it matches and retire it after ``duration_s``."""

    if duration_s <= 0:
        return DropHandle(None, tap)
    rule.max_duration = seconds(duration_s)
    flows = {(src, dst) for _, src, dst in rule.match}
    installed = [links[flow] for flow in sorted(flows) if flow in links]
    for link in installed:
        link.adversary_rule = rule
    attack_activations_total.labels(state=str(rule.target_state)).inc()
    logger.info(
        "drop rule for state %s active on %s links for %.0fs", rule.target_state, len(installed), duration_s
    )

    def retire() -> None:
        rule.active = False
        for link in installed:
            if link.adversary_rule is rule:
                link.adversary_rule = None
        logger.info("drop rule for state %s expired after %s drops", rule.target_state, rule.dropped)

    scheduler.schedule(max(scheduler.now, rule.start + rule.max_duration), retire, "drop_expiry")
    return DropHandle(rule, tap, installed)


def assess_deviation(lts: Lts, id_map: IdMap, stream: Iterable[PacketMeta], state_index: int) -> Tuple[bool, Optional[int]]:
    """Compare ``stream`` with the LTS continuation from the final repetition of ``state_index``.

    Retransmitted copies are skipped. Returns the capture time of the first mismatch.
    """

    expected: List[int] = list(lts.states[state_index].pattern)
    for state in lts.states[state_index + 1 :]:
        expected.extend(state.expand())
    seen: Set[Tuple[str, str, int]] = set()
    position = 0
    for pkt in stream:
        key = (pkt.src, pkt.dst, pkt.seq)
        if key in seen:
            continue
        seen.add(key)
        if position >= len(expected):
            break
        if id_map.lookup(pkt.metadata) != expected[position]:
            return True, pkt.capture_time
        position += 1
    return False, None


@dataclass(frozen=True)
class ScoreResult:
    recall: float
    precision: Optional[float]
    dropped: int
    critical_dropped: int
    critical_total: int


def score(packets: Iterable[PacketMeta], *, state: str, repetition: int) -> ScoreResult:
    """Recall and precision over the unique packets of one repetition of ``state``."""

    dropped: Set[Tuple[str, str, int]] = set()
    critical: Set[Tuple[str, str, int]] = set()
    for pkt in packets:
        if pkt.state != state or pkt.repetition != repetition:
            continue
        key = (pkt.src, pkt.dst, pkt.seq)
        if pkt.critical:
            critical.add(key)
        if pkt.dropped_by_adversary:
            dropped.add(key)
    critical_dropped = len(dropped & critical)
    recall = critical_dropped / len(critical) if critical else 0.0
    precision = critical_dropped / len(dropped) if dropped else None
    return ScoreResult(recall, precision, len(dropped), critical_dropped, len(critical))


@dataclass
class AttackReport:
    target_state: int
    signal_time: Optional[int]
    dropped: List[PacketMeta]
    recall: float
    precision: Optional[float]
    deviated: bool
    first_divergence_time: Optional[int]
    tracking_lost: Optional[str] = None


class Sniper:
    """Adversary at the supervisory switch: listens on the tap and installs a drop rule on the signal."""

    def __init__(
        self,
        candidates: Sequence[Lts],
        id_map: IdMap,
        target_state: int,
        duration_s: float,
        *,
        links: Dict[Tuple[str, str], LinkModel],
        scheduler: EventScheduler,
        tap: Tap,
        gap_factor: Optional[float] = None,
    ) -> None:
        if not candidates:
            raise ValueError("at least one candidate LTS is required")
        self.primary = candidates[0]
        self.id_map = id_map
        self.target_state = target_state
        self.duration_s = duration_s
        self.links = links
        self.scheduler = scheduler
        self.tap = tap
        self.handle: Optional[DropHandle] = None
        self.chosen: Optional[Tuple[Lts, int]] = None
        self.post_signal: List[PacketMeta] = []
        self._pre_signal: Set[Tuple[str, str, int]] = set()
        self.tracker = CandidateTracker(
            candidates,
            id_map,
            self.primary.states[target_state].pattern,
            on_signal=self._on_signal,
            gap_factor=gap_factor,
        )

    def attach(self) -> None:
        self.tap.subscribe(self._on_packet)

    def _on_packet(self, pkt: PacketMeta) -> None:
        key = (pkt.src, pkt.dst, pkt.seq)
        if self.chosen is None:
            self._pre_signal.add(key)
            self.tracker.feed(pkt)
        elif key not in self._pre_signal:
            self.post_signal.append(pkt)

    def _on_signal(self, lts: Lts, state: int, now: int) -> None:
        self.chosen = (lts, state)
        rule = DropRule(
            target_state=state,
            match=match_set(lts, self.id_map, state),
            start=now,
            max_duration=seconds(self.duration_s),
        )
        self.handle = execute_drop(
            rule, self.duration_s, links=self.links, scheduler=self.scheduler, tap=self.tap
        )

    def report(self, *, state_label: str, repetition: int) -> AttackReport:
        signal = self.tracker.fired[2] if self.tracker.fired else None
        dropped = self.handle.dropped_packets() if self.handle else []
        result = score(self.tap.trace.packets, state=state_label, repetition=repetition)
        deviated, divergence = False, None
        if self.chosen is not None:
            lts, state = self.chosen
            deviated, divergence = assess_deviation(lts, self.id_map, self.post_signal, state)
        lost = None
        if self.chosen is None:
            reasons = [str(t.state.lost) for _, t in self.tracker.trackers if t.lost]
            lost = "; ".join(reasons) if reasons else None
        return AttackReport(
            target_state=self.target_state,
            signal_time=signal,
            dropped=dropped,
            recall=result.recall,
            precision=result.precision,
            deviated=deviated,
            first_divergence_time=divergence,
            tracking_lost=lost,
        )


__all__ = [
    "AttackReport",
    "CandidateTracker",
    "DropHandle",
    "OnlineTracker",
    "ScoreResult",
    "Sniper",
    "TrackingState",
    "assess_deviation",
    "execute_drop",
    "match_set",
    "score",
    "track_online",
]
