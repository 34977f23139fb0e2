"""Deterministic discrete-event scheduler with a microsecond virtual clock."""

from __future__ import annotations

import heapq
import logging
import zlib
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..app.core.errors import SchedulingError
from ..app.core.metrics import events_dispatched_total

logger = logging.getLogger(__name__)

US_PER_S = 1_000_000
US_PER_MS = 1_000


def seconds(value: float) -> int:
    """Convert seconds to integer microseconds of virtual time."""

    return int(round(value * US_PER_S))


@dataclass(order=True)
class SimEvent:
    """One pending callback; ordering is ``(time, ordinal)``."""

    time: int
    ordinal: int
    action: Callable[[], None] = field(compare=False)
    name: str = field(default="", compare=False)


class SeededRng:
    """numpy PCG64 generator keyed by an integer seed.

    ``child(label)`` derives an independent stream for one purpose so that adding
    a consumer of randomness never perturbs the draws of another.
    """

    algorithm = "numpy.PCG64"

    def __init__(self, seed: int, *, _sequence: Optional[np.random.SeedSequence] = None) -> None:
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._sequence = _sequence or np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))

    def child(self, label: str) -> "SeededRng":
        key = zlib.crc32(label.encode("utf-8"))
        sequence = np.random.SeedSequence(self.seed, spawn_key=(key,))
        return SeededRng(self.seed, _sequence=sequence)

    def uniform(self, low: float, high: float) -> float:
        return float(self.generator.uniform(low, high))

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in ``[low, high)``."""

        return int(self.generator.integers(low, high))

    def choice(self, options: List[str]) -> str:
        return options[int(self.generator.integers(0, len(options)))]


class EventScheduler:
    """Single-threaded event loop over virtual time.

    Events are dispatched in nondecreasing ``(time, ordinal)`` order; the ordinal is
    a monotone counter so same-time events run in scheduling order.
    """

    def __init__(self, *, start_time: int = 0, record_dispatch: bool = False) -> None:
        if start_time < 0:
            raise ValueError("start_time must be non-negative")
        self._now = int(start_time)
        self._queue: List[SimEvent] = []
        self._next_ordinal = 0
        self._record = record_dispatch
        self.dispatch_log: List[Tuple[int, int, str]] = []

    @property
    def now(self) -> int:
        return self._now

    # ------------------------------------------------------------------
    def schedule(self, time: int, action: Callable[[], None], name: str = "") -> int:
        """Enqueue ``action`` at virtual ``time``; returns its ordinal."""

        time = int(time)
        if time < self._now:
            raise SchedulingError(f"cannot schedule at {time}us, clock is at {self._now}us")
        ordinal = self._next_ordinal
        self._next_ordinal += 1
        heapq.heappush(self._queue, SimEvent(time, ordinal, action, name))
        return ordinal

    def schedule_in(self, delay: int, action: Callable[[], None], name: str = "") -> int:
        return self.schedule(self._now + int(delay), action, name)

    # ------------------------------------------------------------------
    def run_until(self, t_end: int) -> int:
        """Dispatch every event with ``time <= t_end`` and park the clock at ``t_end``.

        Returns the number of events dispatched.
        """

        t_end = int(t_end)
        if t_end < self._now:
            raise SchedulingError(f"run_until({t_end}) is behind the clock ({self._now})")
        dispatched = 0
        queue = self._queue
        while queue and queue[0].time <= t_end:
            event = heapq.heappop(queue)
            self._now = event.time
            if self._record:
                self.dispatch_log.append((event.time, event.ordinal, event.name))
            event.action()
            dispatched += 1
        self._now = t_end
        if dispatched:
            events_dispatched_total.inc(dispatched)
        logger.debug("run_until(%s) dispatched %s events", t_end, dispatched)
        return dispatched


__all__ = ["EventScheduler", "SeededRng", "SimEvent", "seconds", "US_PER_S", "US_PER_MS"]
