"""Passive profiling: cycle segmentation, retransmission removal and metadata ids."""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..errors import CycleBoundaryError, InconsistentCyclesError
from ..simkernel.links import MetadataTuple
from ..wire.capture import CaptureTrace, PacketMeta
from .lts import Lts, merge_candidates
from .mining import Pattern, mine_patterns

logger = logging.getLogger(__name__)

DEFAULT_GAP_FACTOR = 50.0
ID_MAP_HEADER = ("id", "length_bytes", "src", "dst")

MetadataSequence = List[int]


@dataclass
class IdMap:
    """Bijection between metadata tuples and small integers, first occurrence first."""

    ids: Dict[MetadataTuple, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.ids)

    def assign(self, key: MetadataTuple) -> int:
        existing = self.ids.get(key)
        if existing is not None:
            return existing
        new_id = len(self.ids) + 1
        self.ids[key] = new_id
        return new_id

    def lookup(self, key: MetadataTuple) -> Optional[int]:
        return self.ids.get(key)

    def tuple_of(self, metadata_id: int) -> MetadataTuple:
        for key, value in self.ids.items():
            if value == metadata_id:
                return key
        raise KeyError(metadata_id)

    def rows(self) -> List[Tuple[int, int, str, str]]:
        return [(value, key[0], key[1], key[2]) for key, value in sorted(self.ids.items(), key=lambda kv: kv[1])]


def _gaps(packets: Sequence[PacketMeta]) -> List[int]:
    return [b.capture_time - a.capture_time for a, b in zip(packets, packets[1:])]


def segment_cycles(trace: CaptureTrace, *, k: float = DEFAULT_GAP_FACTOR) -> List[CaptureTrace]:
    """Split a capture into complete operational cycles.

    A boundary is any gap larger than ``k`` times the running mean of the gaps seen
    so far inside the current burst. The capture edges count as boundaries only when
    the silence before the first packet (after the last one) is that long too, so a
    burst cut by the start or end of the capture is dropped.
    """

    packets = trace.packets
    if len(packets) < 2:
        raise CycleBoundaryError("no cycle boundary detected: fewer than two packets")
    bursts: List[List[PacketMeta]] = [[packets[0]]]
    total = 0
    count = 0
    for prev, pkt in zip(packets, packets[1:]):
        gap = pkt.capture_time - prev.capture_time
        if count and gap > k * (total / count):
            bursts.append([pkt])
            total = 0
            count = 0
            continue
        bursts[-1].append(pkt)
        total += gap
        count += 1
    inner = [g for burst in bursts for g in _gaps(burst)]
    edge_threshold = k * (sum(inner) / len(inner)) if inner else 0.0
    lead_in = packets[0].capture_time - trace.start
    tail = trace.stop - packets[-1].capture_time
    keep_first = lead_in > edge_threshold
    keep_last = tail > edge_threshold
    if len(bursts) == 1 and not (keep_first and keep_last):
        raise CycleBoundaryError("no cycle boundary detected: no idle gap in the capture")
    chosen = list(bursts)
    if not keep_last:
        chosen = chosen[:-1]
    if not keep_first and chosen:
        chosen = chosen[1:]
    logger.info(
        "segmented %s packets into %s bursts, kept %s complete cycles", len(packets), len(bursts), len(chosen)
    )
    return [
        CaptureTrace(burst, start=burst[0].capture_time, end=burst[-1].capture_time)
        for burst in chosen
    ]


def dedup_retransmissions(trace: CaptureTrace) -> CaptureTrace:
    """Keep the first observed copy of every (flow, seq)."""

    seen = set()
    kept: List[PacketMeta] = []
    for pkt in trace.packets:
        key = (pkt.src, pkt.dst, pkt.seq)
        if key in seen:
            continue
        seen.add(key)
        kept.append(pkt)
    return CaptureTrace(kept, start=trace.start, end=trace.end)


def assign_ids(trace: Iterable[PacketMeta], id_map: Optional[IdMap] = None) -> Tuple[MetadataSequence, IdMap]:
    """Map each packet to its metadata id, extending ``id_map`` in first-occurrence order."""

    id_map = id_map if id_map is not None else IdMap()
    sequence = [id_map.assign(pkt.metadata) for pkt in trace]
    return sequence, id_map


def consistent_sequence(cycles: Sequence[Sequence[int]]) -> MetadataSequence:
    """Return the sequence shared by the most cycles; at least two must agree."""

    if len(cycles) < 2:
        raise InconsistentCyclesError(f"need at least two cycles, got {len(cycles)}")
    votes = Counter(tuple(cycle) for cycle in cycles)
    sequence, agreeing = max(votes.items(), key=lambda item: (item[1], -_first_index(cycles, item[0])))
    if agreeing < 2:
        raise InconsistentCyclesError(f"no two of {len(cycles)} cycles agree")
    if agreeing < len(cycles):
        logger.info("%s of %s cycles agree; outliers ignored", agreeing, len(cycles))
    return list(sequence)


def _first_index(cycles: Sequence[Sequence[int]], candidate: Tuple[int, ...]) -> int:
    for index, cycle in enumerate(cycles):
        if tuple(cycle) == candidate:
            return index
    return len(cycles)


@dataclass
class SniperProfile:
    """Everything the passive phase learns from a capture."""

    cycles: int
    sequence: MetadataSequence
    id_map: IdMap
    patterns: List[Pattern]
    repetitions: List[int]
    candidates: List[Lts]

    @property
    def lts(self) -> Lts:
        return self.candidates[0]


def build_profile(trace: CaptureTrace, *, k: float = DEFAULT_GAP_FACTOR) -> SniperProfile:
    """Segment, dedup, number, mine and merge: the whole passive phase."""

    cycles = [dedup_retransmissions(cycle) for cycle in segment_cycles(trace, k=k)]
    id_map = IdMap()
    sequences = [assign_ids(cycle, id_map)[0] for cycle in cycles]
    sequence = consistent_sequence(sequences)
    patterns, repetitions = mine_patterns(sequence)
    candidates = merge_candidates(patterns, repetitions)
    logger.info(
        "profile: %s cycles, %s ids, %s patterns with repetitions %s",
        len(cycles), len(id_map), len(patterns), repetitions,
    )
    return SniperProfile(len(cycles), sequence, id_map, patterns, repetitions, candidates)


def write_id_map_csv(id_map: IdMap, path: Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ID_MAP_HEADER)
        writer.writerows(id_map.rows())
    return path


def read_id_map_csv(path: Path) -> IdMap:
    id_map = IdMap()
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            id_map.ids[(int(row["length_bytes"]), row["src"], row["dst"])] = int(row["id"])
    return id_map


__all__ = [
    "DEFAULT_GAP_FACTOR",
    "IdMap",
    "MetadataSequence",
    "SniperProfile",
    "assign_ids",
    "build_profile",
    "consistent_sequence",
    "dedup_retransmissions",
    "read_id_map_csv",
    "segment_cycles",
    "write_id_map_csv",
]
