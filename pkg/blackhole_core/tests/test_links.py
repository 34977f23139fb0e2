from __future__ import annotations

import pytest

from blackhole_core.app.core.errors import FluctuationError, LinkError
from blackhole_core.app.core.simkernel.links import (
    DropRule,
    FluctuationWindow,
    LinkModel,
    inject_fluctuations,
    link_deliver,
)
from blackhole_core.app.core.wire.capture import PacketMeta
from blackhole_core.runtime.scheduler import SeededRng, seconds

SRC, DST = "192.168.1.10", "192.168.1.20"


def _pkt(length: int = 69) -> PacketMeta:
    return PacketMeta(capture_time=0, src=SRC, dst=DST, wire_length=length, seq=0)


def test_clean_link_adds_base_latency() -> None:
    link = LinkModel(SRC, DST, base_latency=10_000)

    outcome = link_deliver(_pkt(), link, 5_000)

    assert outcome.delivered
    assert outcome.at == 15_000


def test_packet_on_wrong_link_is_rejected() -> None:
    link = LinkModel(DST, SRC)

    with pytest.raises(LinkError):
        link_deliver(_pkt(), link, 0)


def test_fluctuation_windows_delay_or_drop() -> None:
    link = LinkModel(
        SRC,
        DST,
        base_latency=10_000,
        fluctuation_windows=[
            FluctuationWindow(seconds(10), seconds(20), "delay", extra_delay=150_000),
            FluctuationWindow(seconds(30), seconds(40), "drop"),
        ],
    )

    delayed = link_deliver(_pkt(), link, seconds(15))
    dropped = link_deliver(_pkt(), link, seconds(35))
    after = link_deliver(_pkt(), link, seconds(40))

    assert delayed.at == seconds(15) + 160_000
    assert not dropped.delivered and dropped.reason == "fluctuation"
    assert after.at == seconds(40) + 10_000


def test_adversary_rule_is_checked_before_fluctuations() -> None:
    link = LinkModel(SRC, DST, fluctuation_windows=[FluctuationWindow(0, seconds(100), "delay")])
    rule = DropRule(target_state=0, match=frozenset({(69, SRC, DST)}), start=0, max_duration=seconds(60))
    link.adversary_rule = rule

    outcome = link_deliver(_pkt(), link, seconds(1))
    other = link_deliver(_pkt(70), link, seconds(1))
    expired = link_deliver(_pkt(), link, seconds(60))

    assert outcome.reason == "adversary"
    assert other.delivered
    assert expired.delivered
    assert rule.dropped == 1


def test_overlapping_windows_are_rejected() -> None:
    with pytest.raises(FluctuationError):
        LinkModel(
            SRC,
            DST,
            fluctuation_windows=[
                FluctuationWindow(0, seconds(40), "drop"),
                FluctuationWindow(seconds(30), seconds(60), "delay"),
            ],
        )


def test_injected_fluctuations_stay_disjoint_inside_the_span() -> None:
    link = LinkModel(SRC, DST)
    span = (seconds(3600), seconds(25200))

    windows = inject_fluctuations(link, span, SeededRng(1).child("x"))

    assert len(windows) == 5
    for window in windows:
        assert span[0] <= window.start < window.end <= span[1]
        assert seconds(30) <= window.end - window.start <= seconds(60)
        assert window.mode in {"drop", "delay"}
    for prev, cur in zip(windows, windows[1:]):
        assert prev.end <= cur.start
    assert link.fluctuation_windows == windows


def test_injection_is_deterministic_per_seed() -> None:
    span = (0, seconds(3600))
    first = inject_fluctuations(LinkModel(SRC, DST), span, SeededRng(3).child("x"))
    again = inject_fluctuations(LinkModel(SRC, DST), span, SeededRng(3).child("x"))

    assert first == again


def test_injected_windows_hold_for_many_seeds() -> None:
    count = 3
    span = (0, seconds(28800))
    for seed in range(1000):
        windows = inject_fluctuations(LinkModel(SRC, DST), span, SeededRng(seed).child("links"), count=count)

        assert len(windows) == count
        for window in windows:
            assert span[0] <= window.start < window.end <= span[1]
            assert seconds(30) <= window.end - window.start <= seconds(60)
        for prev, cur in zip(windows, windows[1:]):
            assert prev.end <= cur.start


def test_span_too_short_for_the_windows() -> None:
    with pytest.raises(FluctuationError) as excinfo:
        inject_fluctuations(LinkModel(SRC, DST), (0, seconds(100)), SeededRng(1))
    assert excinfo.value.error_class == "span_too_short"
