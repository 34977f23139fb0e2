"""Metadata pattern mining over a single operational cycle."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Set, Tuple

import numpy as np

from ..errors import UndecomposableSequenceError

logger = logging.getLogger(__name__)

Pattern = Tuple[int, ...]


@dataclass
class _Frame:
    pos: int
    choices: Iterator[Tuple[int, int]]
    taken: Tuple[int, int] = (0, 0)


def _same(arr: np.ndarray, a: int, b: int, n: int) -> bool:
    return bool(np.array_equal(arr[a : a + n], arr[b : b + n]))


def _choices(arr: np.ndarray, pos: int) -> Iterator[Tuple[int, int]]:
    """(length, repetitions) options at ``pos``: shortest length first, most repetitions first."""

    remaining = len(arr) - pos
    longest = remaining // 2
    if longest < 2:
        return
    # a repeating unit of length n needs arr[pos + n] == arr[pos]
    hits = np.flatnonzero(arr[pos + 2 : pos + longest + 1] == arr[pos]) + 2
    for n in hits.tolist():
        if n % 2 or not _same(arr, pos, pos + n, n):
            continue
        reps = 2
        while (reps + 1) * n <= remaining and _same(arr, pos, pos + reps * n, n):
            reps += 1
        for r in range(reps, 1, -1):
            yield n, r


def mine_patterns(seq: Sequence[int]) -> Tuple[List[Pattern], List[int]]:
    """Decompose ``seq`` into consecutive even-length patterns repeated at least twice.

    Scans shortest patterns first and backtracks when the residual cannot be
    decomposed, retrying the last pattern with fewer repetitions and then with a
    longer length. Positions known to be undecomposable are not revisited.
    """

    arr = np.asarray(list(seq), dtype=np.int64)
    length = len(arr)
    if length == 0:
        return [], []
    if length % 2:
        raise UndecomposableSequenceError(f"undecomposable sequence: odd length {length}")

    failed: Set[int] = set()
    stack: List[_Frame] = [_Frame(0, _choices(arr, 0))]
    while stack:
        frame = stack[-1]
        choice = next(frame.choices, None)
        if choice is None:
            failed.add(frame.pos)
            stack.pop()
            continue
        frame.taken = choice
        n, r = choice
        nxt = frame.pos + n * r
        if nxt == length:
            patterns = [tuple(arr[f.pos : f.pos + f.taken[0]].tolist()) for f in stack]
            repetitions = [f.taken[1] for f in stack]
            logger.debug("mined %s patterns from %s ids", len(patterns), length)
            return patterns, repetitions
        if nxt in failed:
            continue
        stack.append(_Frame(nxt, _choices(arr, nxt)))

    raise UndecomposableSequenceError(
        f"undecomposable sequence: no consecutive-repetition cover of {length} ids"
    )


def expand(patterns: Sequence[Sequence[int]], repetitions: Sequence[int]) -> List[int]:
    out: List[int] = []
    for pattern, reps in zip(patterns, repetitions):
        out.extend(list(pattern) * reps)
    return out


__all__ = ["Pattern", "expand", "mine_patterns"]
