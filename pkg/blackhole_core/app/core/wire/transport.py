"""TCP-like reliable delivery of application messages across the supervisory switch."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, DefaultDict, Dict, List, Optional, Tuple

from ....runtime.scheduler import EventScheduler, US_PER_MS
from ..simkernel.links import LinkModel, link_deliver
from .capture import AppMessage, PacketMeta, Tap
from .codec import DEFAULT_OVERHEAD, ciphertext_length

logger = logging.getLogger(__name__)

DeliverFn = Callable[[AppMessage, int], None]
LostFn = Callable[[AppMessage, int], None]


@dataclass
class TransportConfig:
    rto: int = 200 * US_PER_MS
    max_retries: int = 5
    overhead: int = DEFAULT_OVERHEAD

    def __post_init__(self) -> None:
        if self.rto <= 0:
            raise ValueError("rto must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


class Transport:
    """Turns messages into packets, retransmits at a fixed RTO and reports the outcome.

    Every attempt is shown to the tap after the link has decided its fate, so the
    capture also holds copies the adversary dropped.
    """

    def __init__(
        self,
        scheduler: EventScheduler,
        links: Dict[Tuple[str, str], LinkModel],
        addresses: Dict[str, str],
        tap: Tap,
        *,
        config: Optional[TransportConfig] = None,
        on_deliver: Optional[DeliverFn] = None,
        on_lost: Optional[LostFn] = None,
    ) -> None:
        self.scheduler = scheduler
        self.links = links
        self.addresses = addresses
        self.tap = tap
        self.config = config or TransportConfig()
        self.on_deliver = on_deliver
        self.on_lost = on_lost
        self._next_seq: DefaultDict[Tuple[str, str], int] = defaultdict(int)
        self.sent = 0
        self.delivered = 0
        self.lost = 0

    def transmit(self, msg: AppMessage) -> int:
        """Send ``msg`` now; returns the per-flow sequence number it was given."""

        src_ip = self.addresses[msg.src]
        dst_ip = self.addresses[msg.dst]
        flow = (src_ip, dst_ip)
        seq = self._next_seq[flow]
        self._next_seq[flow] = seq + 1
        self.sent += 1
        self._attempt(msg, src_ip, dst_ip, seq, 0)
        return seq

    def _attempt(self, msg: AppMessage, src_ip: str, dst_ip: str, seq: int, attempt: int) -> None:
        now = self.scheduler.now
        pkt = PacketMeta(
            capture_time=now,
            src=src_ip,
            dst=dst_ip,
            wire_length=ciphertext_length(msg.payload_length, self.config.overhead),
            seq=seq,
            retx=attempt > 0,
            critical=msg.critical,
            state=msg.state,
            repetition=msg.repetition,
        )
        outcome = link_deliver(pkt, self.links[(src_ip, dst_ip)], now)
        pkt.dropped_by_adversary = outcome.reason == "adversary"
        self.tap.capture(pkt)
        if outcome.delivered:
            self.scheduler.schedule(outcome.at, lambda: self._deliver(msg, outcome.at), "deliver")
            return
        if attempt < self.config.max_retries:
            self.scheduler.schedule_in(
                self.config.rto,
                lambda: self._attempt(msg, src_ip, dst_ip, seq, attempt + 1),
                "retransmit",
            )
            return
        self.lost += 1
        logger.debug("message %s %s->%s lost after %s attempts", msg.kind, msg.src, msg.dst, attempt + 1)
        if self.on_lost is not None:
            self.on_lost(msg, now)

    def _deliver(self, msg: AppMessage, at: int) -> None:
        self.delivered += 1
        if self.on_deliver is not None:
            self.on_deliver(msg, at)


def transmit(msg: AppMessage, link: LinkModel, *, scheduler: EventScheduler, tap: Tap,
             config: Optional[TransportConfig] = None) -> List[PacketMeta]:
    """Send one message over ``link`` in isolation and return the attempts seen at the tap.

    Runs the scheduler until the message is delivered or finally lost.
    """

    if msg.src != link.src or msg.dst != link.dst:
        raise ValueError("message endpoints do not match the link")
    transport = Transport(
        scheduler,
        {(link.src, link.dst): link},
        {link.src: link.src, link.dst: link.dst},
        tap,
        config=config,
    )
    first = len(tap.trace)
    transport.transmit(msg)
    cfg = transport.config
    horizon = scheduler.now + cfg.rto * (cfg.max_retries + 1) + link.base_latency * 4
    for window in link.fluctuation_windows:
        horizon += window.extra_delay
    scheduler.run_until(horizon)
    return tap.trace.packets[first:]


__all__ = ["Transport", "TransportConfig", "transmit"]
