"""Point-to-point link model with benign fluctuations and adversarial drop rules."""
from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Protocol, Tuple

from ....runtime.scheduler import SeededRng, US_PER_MS, seconds
from ..errors import FluctuationError, LinkError
from ..metrics import packets_dropped_total

logger = logging.getLogger(__name__)

MODES = ("drop", "delay")
DEFAULT_EXTRA_DELAY_US = 150 * US_PER_MS

MetadataTuple = Tuple[int, str, str]


class Routable(Protocol):
    src: str
    dst: str
    wire_length: int


@dataclass(frozen=True)
class FluctuationWindow:
    start: int
    end: int
    mode: str
    extra_delay: int = DEFAULT_EXTRA_DELAY_US

    def covers(self, now: int) -> bool:
        return self.start <= now < self.end


@dataclass
class DropRule:
    """Adversary rule installed at the switch: drop packets whose metadata tuple matches."""

    target_state: int
    match: FrozenSet[MetadataTuple]
    start: int
    max_duration: int
    active: bool = True
    dropped: int = 0

    def matches(self, pkt: Routable, now: int) -> bool:
        if not self.active or now < self.start or now >= self.start + self.max_duration:
            return False
        return (pkt.wire_length, pkt.src, pkt.dst) in self.match


@dataclass(frozen=True)
class DeliveryOutcome:
    delivered: bool
    at: Optional[int] = None
    reason: Optional[str] = None


@dataclass
class LinkModel:
    src: str
    dst: str
    base_latency: int = 10 * US_PER_MS
    fluctuation_windows: List[FluctuationWindow] = field(default_factory=list)
    adversary_rule: Optional[DropRule] = None

    def __post_init__(self) -> None:
        if self.base_latency <= 0:
            raise ValueError("base_latency must be positive")
        self.set_windows(self.fluctuation_windows)

    def set_windows(self, windows: List[FluctuationWindow]) -> None:
        ordered = sorted(windows, key=lambda w: w.start)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.start < prev.end:
                raise FluctuationError(f"overlapping fluctuation windows on {self.src}->{self.dst}")
        self.fluctuation_windows = ordered
        self._starts = [w.start for w in ordered]

    def add_windows(self, windows: List[FluctuationWindow]) -> None:
        self.set_windows(self.fluctuation_windows + list(windows))

    def window_at(self, now: int) -> Optional[FluctuationWindow]:
        idx = bisect.bisect_right(self._starts, now) - 1
        if idx >= 0 and self.fluctuation_windows[idx].covers(now):
            return self.fluctuation_windows[idx]
        return None


def link_deliver(pkt: Routable, link: LinkModel, now: int) -> DeliveryOutcome:
    """Decide the fate of one transmission attempt.

    The adversary rule is evaluated first, then any fluctuation window covering ``now``.
    """

    if pkt.src != link.src or pkt.dst != link.dst:
        raise LinkError(f"packet {pkt.src}->{pkt.dst} does not belong to link {link.src}->{link.dst}")
    rule = link.adversary_rule
    if rule is not None and rule.matches(pkt, now):
        rule.dropped += 1
        packets_dropped_total.labels(reason="adversary").inc()
        return DeliveryOutcome(False, reason="adversary")
    window = link.window_at(now)
    if window is not None:
        if window.mode == "drop":
            packets_dropped_total.labels(reason="fluctuation").inc()
            return DeliveryOutcome(False, reason="fluctuation")
        return DeliveryOutcome(True, at=now + link.base_latency + window.extra_delay)
    return DeliveryOutcome(True, at=now + link.base_latency)


def inject_fluctuations(
    link: LinkModel,
    cycle_span: Tuple[int, int],
    rng: SeededRng,
    *,
    count: int = 5,
    min_duration_s: float = 30.0,
    max_duration_s: float = 60.0,
    extra_delay: int = DEFAULT_EXTRA_DELAY_US,
) -> List[FluctuationWindow]:
    """Place ``count`` disjoint windows of 30-60 s at random inside ``cycle_span``.

    Durations are uniform in ``[min_duration_s, max_duration_s]``; the leftover slack
    is split at uniformly drawn cut points so windows never overlap. The windows are
    also added to ``link``.
    """

    start, end = int(cycle_span[0]), int(cycle_span[1])
    if end <= start:
        raise FluctuationError("cycle span is empty")
    if count <= 0:
        return []
    durations = [seconds(rng.uniform(min_duration_s, max_duration_s)) for _ in range(count)]
    slack = (end - start) - sum(durations)
    if slack < 0:
        raise FluctuationError(
            f"span of {(end - start) / 1e6:.1f}s cannot hold {count} windows of {min_duration_s}-{max_duration_s}s"
        )
    cuts = sorted(rng.integers(0, slack + 1) for _ in range(count))
    modes = [rng.choice(list(MODES)) for _ in range(count)]
    windows: List[FluctuationWindow] = []
    consumed = 0
    for cut, duration, mode in zip(cuts, durations, modes):
        w_start = start + cut + consumed
        windows.append(FluctuationWindow(w_start, w_start + duration, mode, extra_delay))
        consumed += duration
    link.add_windows(windows)
    logger.debug("injected %s fluctuation windows on %s->%s", len(windows), link.src, link.dst)
    return windows


__all__ = [
    "DeliveryOutcome",
    "DropRule",
    "FluctuationWindow",
    "LinkModel",
    "MetadataTuple",
    "inject_fluctuations",
    "link_deliver",
]
