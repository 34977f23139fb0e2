"""True/false positive rates and detection delay of a verdict stream."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

from .windows import Verdict


@dataclass(frozen=True)
class Evaluation:
    tpr: float
    fpr: float
    delay: Optional[int]
    attack_windows: int
    benign_windows: int

    @property
    def delay_s(self) -> Optional[float]:
        return None if self.delay is None else self.delay / 1_000_000


def _under_attack(verdict: Verdict, interval: Tuple[int, int], drops: Sequence[int]) -> bool:
    if drops:
        index = bisect.bisect_left(drops, verdict.start)
        return index < len(drops) and drops[index] < verdict.end
    start, end = interval
    return verdict.start < end and start < verdict.end


def evaluate(
    verdicts: Sequence[Verdict],
    attack_interval: Tuple[int, int],
    *,
    drop_times: Iterable[int] = (),
) -> Evaluation:
    """Score verdicts against the attack.

    A window counts as attacked when it holds a dropped packet; without drop times
    any overlap with ``attack_interval`` counts. The delay runs from the attack
    start to the end of the first flagged window closing after it.
    """

    drops = sorted(drop_times)
    attack_start = attack_interval[0]
    attacked = flagged_attacked = benign = flagged_benign = 0
    delay: Optional[int] = None
    for verdict in verdicts:
        if _under_attack(verdict, attack_interval, drops):
            attacked += 1
            flagged_attacked += verdict.flagged
        else:
            benign += 1
            flagged_benign += verdict.flagged
        if verdict.flagged and delay is None and verdict.end > attack_start:
            delay = verdict.end - attack_start
    return Evaluation(
        tpr=flagged_attacked / attacked if attacked else 0.0,
        fpr=flagged_benign / benign if benign else 0.0,
        delay=delay,
        attack_windows=attacked,
        benign_windows=benign,
    )


def quantization_bound(window_size: int, attack_start: int, origin: int = 0) -> int:
    """Smallest delay a tumbling-window detector can report for an attack starting at ``attack_start``."""

    offset = (attack_start - origin) % window_size
    return window_size - offset


__all__ = ["Evaluation", "evaluate", "quantization_bound"]
