"""Labeled transition systems inferred from mined patterns."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Set, Tuple

from .mining import Pattern

logger = logging.getLogger(__name__)

LTS_HEADER = ("state_index", "repetitions", "ids_colon_separated")


@dataclass(frozen=True)
class LtsState:
    pattern: Pattern
    repetitions: int

    def expand(self) -> List[int]:
        return list(self.pattern) * self.repetitions


@dataclass(frozen=True)
class Lts:
    """State ``i`` repeats ``pattern_i`` ``repetitions_i`` times, then hands over to ``i + 1``."""

    states: Tuple[LtsState, ...]

    @classmethod
    def from_patterns(cls, patterns: Sequence[Sequence[int]], repetitions: Sequence[int]) -> "Lts":
        if len(patterns) != len(repetitions):
            raise ValueError("patterns and repetitions must have the same length")
        return cls(tuple(LtsState(tuple(p), int(r)) for p, r in zip(patterns, repetitions)))

    @property
    def state_count(self) -> int:
        return len(self.states)

    @property
    def patterns(self) -> List[Pattern]:
        return [state.pattern for state in self.states]

    @property
    def repetitions(self) -> List[int]:
        return [state.repetitions for state in self.states]

    def expand(self) -> List[int]:
        out: List[int] = []
        for state in self.states:
            out.extend(state.expand())
        return out

    def reproduces(self, sequence: Sequence[int]) -> bool:
        return self.expand() == list(sequence)

    def index_of(self, pattern: Sequence[int]) -> Optional[int]:
        target = tuple(pattern)
        for index, state in enumerate(self.states):
            if state.pattern == target:
                return index
        return None


def _folds(states: Tuple[LtsState, ...]) -> Iterator[Tuple[LtsState, ...]]:
    """Every LTS obtained by folding consecutive occurrences of one periodic run of states.

    ``j`` folded occurrences become either one state holding the run ``j`` times or
    the run's pattern repeated ``j`` times; a single occurrence becomes one state.
    """

    n = len(states)
    for start in range(n):
        for unit in range(2, (n - start) // 2 + 1):
            block = states[start : start + unit]
            if start >= unit and states[start - unit : start] == block:
                continue
            count = 1
            while states[start + count * unit : start + (count + 1) * unit] == block:
                count += 1
            if count < 2:
                continue
            pattern = tuple(i for state in block for i in state.expand())
            for first in range(count):
                head = states[: start + first * unit]
                for j in range(count - first, 0, -1):
                    tail = states[start + (first + j) * unit :]
                    if j > 1:
                        yield head + (LtsState(pattern * j, 1),) + tail
                        yield head + (LtsState(pattern, j),) + tail
                    else:
                        yield head + (LtsState(pattern, 1),) + tail


def merge_candidates(patterns: Sequence[Sequence[int]], repetitions: Sequence[int]) -> List[Lts]:
    """Candidate LTSs ordered by state count, the unmerged decomposition last.

    Folding is applied to every candidate until no new one appears, so intermediate
    and partial merges are kept alongside the fully folded one.
    """

    base = Lts.from_patterns(patterns, repetitions)
    found: List[Tuple[LtsState, ...]] = [base.states]
    seen: Set[Tuple[LtsState, ...]] = {base.states}
    index = 0
    while index < len(found):
        for folded in _folds(found[index]):
            if folded not in seen:
                seen.add(folded)
                found.append(folded)
        index += 1
    ordered = [Lts(states) for states in sorted(found, key=len)]
    logger.info("built %s candidate LTS (state counts %s)", len(ordered), [c.state_count for c in ordered])
    return ordered


def write_lts_csv(lts: Lts, path: Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LTS_HEADER)
        for index, state in enumerate(lts.states):
            writer.writerow((index, state.repetitions, ":".join(str(i) for i in state.pattern)))
    return path


def read_lts_csv(path: Path) -> Lts:
    states: List[LtsState] = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            pattern = tuple(int(i) for i in row["ids_colon_separated"].split(":") if i)
            states.append(LtsState(pattern, int(row["repetitions"])))
    return Lts(tuple(states))


__all__ = ["LTS_HEADER", "Lts", "LtsState", "merge_candidates", "read_lts_csv", "write_lts_csv"]
