"""Tumbling windows over traffic and per-window verdicts."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import List, Sequence

from ....runtime.scheduler import seconds
from ..wire.capture import PacketMeta

DEFAULT_WINDOW_SIZES_S = (30.0, 60.0, 120.0, 300.0, 600.0, 1800.0)


@dataclass(frozen=True)
class Window:
    start: int
    end: int

    @property
    def size(self) -> int:
        return self.end - self.start

    def contains(self, time: int) -> bool:
        return self.start <= time < self.end


@dataclass(frozen=True)
class Verdict:
    """Detector output for one window (or one log entry); timestamped at ``end``."""

    start: int
    end: int
    flagged: bool

    @property
    def time(self) -> int:
        return self.end


def tile(span_start: int, span_end: int, size_s: float) -> List[Window]:
    """Contiguous windows of ``size_s`` covering the span; a trailing partial window is left out."""

    size = seconds(size_s)
    if size <= 0:
        raise ValueError("window size must be positive")
    return [Window(t, t + size) for t in range(span_start, span_end - size + 1, size)]


def bucket(packets: Sequence[PacketMeta], windows: Sequence[Window]) -> List[List[PacketMeta]]:
    """Split time-ordered ``packets`` into the given windows."""

    times = [pkt.capture_time for pkt in packets]
    out: List[List[PacketMeta]] = []
    for window in windows:
        lo = bisect.bisect_left(times, window.start)
        hi = bisect.bisect_left(times, window.end)
        out.append(list(packets[lo:hi]))
    return out


__all__ = ["DEFAULT_WINDOW_SIZES_S", "Verdict", "Window", "bucket", "tile"]
