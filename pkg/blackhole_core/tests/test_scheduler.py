from __future__ import annotations

import pytest

from blackhole_core.app.core.errors import SchedulingError
from blackhole_core.runtime.scheduler import EventScheduler, SeededRng, seconds


def test_same_time_events_run_in_scheduling_order() -> None:
    scheduler = EventScheduler(record_dispatch=True)
    order: list[str] = []
    scheduler.schedule(500, lambda: order.append("late"), "late")
    scheduler.schedule(100, lambda: order.append("first"), "first")
    scheduler.schedule(100, lambda: order.append("second"), "second")

    dispatched = scheduler.run_until(1_000)

    assert dispatched == 3
    assert order == ["first", "second", "late"]
    assert [name for _, _, name in scheduler.dispatch_log] == ["first", "second", "late"]
    assert scheduler.now == 1_000


def test_events_scheduled_from_handlers_are_dispatched() -> None:
    scheduler = EventScheduler()
    times: list[int] = []

    def tick() -> None:
        times.append(scheduler.now)
        if scheduler.now < 300:
            scheduler.schedule_in(100, tick)

    scheduler.schedule(0, tick)
    scheduler.run_until(10_000)

    assert times == [0, 100, 200, 300]


def test_run_until_leaves_later_events_pending() -> None:
    scheduler = EventScheduler()
    fired: list[int] = []
    scheduler.schedule(50, lambda: fired.append(50))
    scheduler.schedule(150, lambda: fired.append(150))

    scheduler.run_until(100)

    assert fired == [50]
    assert scheduler.now == 100
    scheduler.run_until(200)
    assert fired == [50, 150]


def test_scheduling_in_the_past_is_rejected() -> None:
    scheduler = EventScheduler(start_time=1_000)

    with pytest.raises(SchedulingError) as excinfo:
        scheduler.schedule(999, lambda: None)
    assert excinfo.value.error_class == "schedule_in_past"


def _random_dispatch_log(seed: int, count: int) -> list:
    scheduler = EventScheduler(record_dispatch=True)
    # a narrow time range forces many same-time ties
    times = SeededRng(seed).child("events").generator.integers(0, 100_000, size=count)
    for index, time in enumerate(times.tolist()):
        scheduler.schedule(time, lambda: None, f"event{index % 7}")
    scheduler.run_until(100_000)
    return scheduler.dispatch_log


@pytest.mark.slow
def test_same_seed_reproduces_the_dispatch_log_of_a_million_events() -> None:
    first = _random_dispatch_log(11, 1_000_000)
    again = _random_dispatch_log(11, 1_000_000)

    assert len(first) == 1_000_000
    assert first == again
    assert [entry[:2] for entry in first] == sorted(entry[:2] for entry in first)
    assert _random_dispatch_log(12, 1_000) != _random_dispatch_log(11, 1_000)


def test_seconds_converts_to_integer_microseconds() -> None:
    assert seconds(1.525) == 1_525_000
    assert seconds(0.055) == 55_000


def test_child_streams_are_reproducible_and_independent() -> None:
    first = [SeededRng(7).child("link").uniform(0.0, 1.0) for _ in range(2)]
    other = SeededRng(7).child("another-link").uniform(0.0, 1.0)

    assert first[0] == first[1]
    assert other != first[0]
    assert SeededRng(7).algorithm == "numpy.PCG64"
