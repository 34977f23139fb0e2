"""Packet metadata, capture traces and the passive tap."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, List, Optional, Set, Tuple

from ..metrics import packets_captured_total

logger = logging.getLogger(__name__)

TRACE_HEADER = ("time_us", "src", "dst", "length_bytes", "seq", "retx", "critical", "dropped_by_adversary")


@dataclass(slots=True)
class AppMessage:
    """One application message; ``critical`` is ground truth hidden from the adversary."""

    src: str
    dst: str
    payload_length: int
    kind: str
    critical: bool
    emit_time: int
    state: str = ""
    repetition: int = 0
    slot_index: int = 0
    value: object = None

    def __post_init__(self) -> None:
        if self.payload_length <= 0:
            raise ValueError("payload_length must be positive")


@dataclass(slots=True)
class PacketMeta:
    """Observable metadata of one transmission attempt plus evaluation-only tags."""

    capture_time: int
    src: str
    dst: str
    wire_length: int
    seq: int
    retx: bool = False
    critical: bool = False
    dropped_by_adversary: bool = False
    state: str = ""
    repetition: int = 0

    @property
    def flow(self) -> Tuple[str, str]:
        return (self.src, self.dst)

    @property
    def metadata(self) -> Tuple[int, str, str]:
        return (self.wire_length, self.src, self.dst)


@dataclass
class CaptureTrace:
    """Packets in tap arrival order; ``start``/``end`` bound the capture session."""

    packets: List[PacketMeta] = field(default_factory=list)
    start: int = 0
    end: Optional[int] = None

    def __len__(self) -> int:
        return len(self.packets)

    def __iter__(self) -> Iterator[PacketMeta]:
        return iter(self.packets)

    def append(self, pkt: PacketMeta) -> None:
        if self.packets and pkt.capture_time < self.packets[-1].capture_time:
            raise ValueError("capture_time must be nondecreasing")
        self.packets.append(pkt)

    @property
    def stop(self) -> int:
        if self.end is not None:
            return self.end
        return self.packets[-1].capture_time if self.packets else self.start

    def forwarded(self) -> List[PacketMeta]:
        """What the switch forwards: attempts not dropped by the adversary, one per (flow, seq)."""

        seen: Set[Tuple[str, str, int]] = set()
        out: List[PacketMeta] = []
        for pkt in self.packets:
            if pkt.dropped_by_adversary:
                continue
            key = (pkt.src, pkt.dst, pkt.seq)
            if key in seen:
                continue
            seen.add(key)
            out.append(pkt)
        return out

    def window(self, start: int, end: int) -> "CaptureTrace":
        subset = [pkt for pkt in self.packets if start <= pkt.capture_time < end]
        return CaptureTrace(subset, start=start, end=end)


class Tap:
    """Mirror port on the switch: records every attempt and notifies live listeners."""

    def __init__(self, start: int = 0) -> None:
        self.trace = CaptureTrace(start=start)
        self._listeners: List[Callable[[PacketMeta], None]] = []

    def subscribe(self, listener: Callable[[PacketMeta], None]) -> None:
        self._listeners.append(listener)

    def capture(self, pkt: PacketMeta) -> None:
        self.trace.append(pkt)
        packets_captured_total.labels(retx="1" if pkt.retx else "0").inc()
        for listener in self._listeners:
            listener(pkt)

    def close(self, end: int) -> CaptureTrace:
        self.trace.end = end
        return self.trace


def _flag(value: bool) -> str:
    return "1" if value else "0"


def write_trace_csv(trace: Iterable[PacketMeta], path: Path, *, emit_ground_truth: bool = False) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for pkt in trace:
            writer.writerow(
                (
                    pkt.capture_time,
                    pkt.src,
                    pkt.dst,
                    pkt.wire_length,
                    pkt.seq,
                    _flag(pkt.retx),
                    _flag(pkt.critical) if emit_ground_truth else "",
                    _flag(pkt.dropped_by_adversary) if emit_ground_truth else "",
                )
            )
    return path


def read_trace_csv(path: Path, *, start: int = 0, end: Optional[int] = None) -> CaptureTrace:
    """Parse a trace written by :func:`write_trace_csv` (ground-truth columns optional)."""

    trace = CaptureTrace(start=start, end=end)
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != TRACE_HEADER:
            raise ValueError(f"unexpected trace header: {reader.fieldnames}")
        for row in reader:
            trace.append(
                PacketMeta(
                    capture_time=int(row["time_us"]),
                    src=row["src"],
                    dst=row["dst"],
                    wire_length=int(row["length_bytes"]),
                    seq=int(row["seq"]),
                    retx=row["retx"] == "1",
                    critical=row["critical"] == "1",
                    dropped_by_adversary=row["dropped_by_adversary"] == "1",
                )
            )
    return trace


__all__ = [
    "AppMessage",
    "CaptureTrace",
    "PacketMeta",
    "Tap",
    "TRACE_HEADER",
    "read_trace_csv",
    "write_trace_csv",
]
