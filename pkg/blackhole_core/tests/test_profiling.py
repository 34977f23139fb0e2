from __future__ import annotations

import pytest

from blackhole_core.app.core.errors import CycleBoundaryError, InconsistentCyclesError
from blackhole_core.app.core.sniper import (
    IdMap,
    assign_ids,
    build_profile,
    consistent_sequence,
    dedup_retransmissions,
    segment_cycles,
)
from blackhole_core.app.core.sniper.profiling import read_id_map_csv, write_id_map_csv
from blackhole_core.app.core.wire.capture import CaptureTrace, PacketMeta

P1, P2 = "192.168.1.10", "192.168.1.20"
GAP = 50_000
CYCLE_GAP = 1_000_000_000


def _cycle(start: int) -> list:
    """(1,2) x3 then (3,4) x2 on the wire."""

    rows = [(69, P1, P2), (70, P2, P1)] * 3 + [(71, P1, P2), (72, P2, P1)] * 2
    return [(start + i * GAP, length, src, dst) for i, (length, src, dst) in enumerate(rows)]


def _trace(make_packets, cycles: int = 3) -> CaptureTrace:
    rows = []
    for k in range(cycles):
        rows.extend(_cycle(CYCLE_GAP + k * CYCLE_GAP))
    pkts = make_packets(rows)
    return CaptureTrace(pkts, start=0, end=pkts[-1].capture_time + CYCLE_GAP)


def test_segments_complete_cycles(make_packets) -> None:
    cycles = segment_cycles(_trace(make_packets))

    assert [len(c) for c in cycles] == [10, 10, 10]


def test_cycle_cut_by_the_capture_end_is_dropped(make_packets) -> None:
    trace = _trace(make_packets)
    trace.end = trace.packets[-1].capture_time + GAP

    assert len(segment_cycles(trace)) == 2


def test_capture_without_idle_gap_has_no_boundary(make_packets) -> None:
    pkts = make_packets(_cycle(0))

    with pytest.raises(CycleBoundaryError):
        segment_cycles(CaptureTrace(pkts, start=0, end=pkts[-1].capture_time))


def test_retransmissions_keep_their_first_copy() -> None:
    trace = CaptureTrace(
        [
            PacketMeta(0, P1, P2, 69, 0),
            PacketMeta(200_000, P1, P2, 69, 0, retx=True),
            PacketMeta(250_000, P2, P1, 70, 0),
        ]
    )

    kept = dedup_retransmissions(trace)

    assert [(p.capture_time, p.seq) for p in kept] == [(0, 0), (250_000, 0)]


def test_ids_follow_first_occurrence(make_packets) -> None:
    seq, id_map = assign_ids(make_packets(_cycle(0)))

    assert seq == [1, 2, 1, 2, 1, 2, 3, 4, 3, 4]
    assert id_map.lookup((71, P1, P2)) == 3
    assert id_map.tuple_of(2) == (70, P2, P1)


def test_majority_cycle_wins_and_needs_two_votes() -> None:
    assert consistent_sequence([[1, 2], [1, 3], [1, 2]]) == [1, 2]
    with pytest.raises(InconsistentCyclesError):
        consistent_sequence([[1, 2], [1, 3]])
    with pytest.raises(InconsistentCyclesError):
        consistent_sequence([[1, 2]])


def test_profile_recovers_the_lts(make_packets) -> None:
    profile = build_profile(_trace(make_packets))

    assert profile.cycles == 3
    assert profile.lts.patterns == [(1, 2), (3, 4)]
    assert profile.lts.repetitions == [3, 2]
    assert profile.lts.reproduces(profile.sequence)


def test_id_map_csv_layout(tmp_path) -> None:
    id_map = IdMap()
    id_map.assign((69, P1, P2))
    id_map.assign((70, P2, P1))

    path = write_id_map_csv(id_map, tmp_path / "id_map.csv")

    assert path.read_text().splitlines() == [
        "id,length_bytes,src,dst",
        f"1,69,{P1},{P2}",
        f"2,70,{P2},{P1}",
    ]
    assert read_id_map_csv(path).ids == id_map.ids
