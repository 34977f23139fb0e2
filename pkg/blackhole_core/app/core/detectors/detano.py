"""Automaton detector: bigram transition probabilities over packet metadata."""
from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import DefaultDict, Dict, List, Optional, Sequence, Tuple

from ..errors import DetectorError
from ..metrics import detector_flags_total
from ..simkernel.links import MetadataTuple
from ..wire.capture import PacketMeta
from .windows import Verdict, Window, bucket

logger = logging.getLogger(__name__)

Bigram = Tuple[MetadataTuple, MetadataTuple]


@dataclass
class AutomatonModel:
    probabilities: Dict[Bigram, float] = field(default_factory=dict)
    symbols: frozenset = frozenset()
    min_log_likelihood: float = 0.0
    tolerance: float = 1e-9
    window_size: int = 0

    def mean_log_likelihood(self, symbols: Sequence[MetadataTuple]) -> Optional[float]:
        """Mean log-probability of the window's bigrams; ``None`` if one was never seen."""

        total = 0.0
        for bigram in zip(symbols, symbols[1:]):
            p = self.probabilities.get(bigram)
            if p is None:
                return None
            total += math.log(p)
        return total / (len(symbols) - 1)


def _symbols(packets: Sequence[PacketMeta]) -> List[MetadataTuple]:
    return [pkt.metadata for pkt in packets]


def detano_train(
    packets: Sequence[PacketMeta],
    windows: Sequence[Window],
    *,
    tolerance: float = 1e-9,
) -> AutomatonModel:
    """Estimate P(next | current) from bigrams inside windows; edge-spanning pairs are ignored."""

    if not windows or not packets:
        raise DetectorError("empty training traffic", error_class="empty_training")
    per_window = [_symbols(chunk) for chunk in bucket(packets, windows)]
    counts: DefaultDict[MetadataTuple, Counter] = defaultdict(Counter)
    for symbols in per_window:
        for a, b in zip(symbols, symbols[1:]):
            counts[a][b] += 1
    probabilities: Dict[Bigram, float] = {}
    for a, successors in counts.items():
        total = sum(successors.values())
        for b, n in successors.items():
            probabilities[(a, b)] = n / total
    model = AutomatonModel(
        probabilities,
        frozenset(pkt.metadata for pkt in packets),
        0.0,
        tolerance,
        windows[0].size,
    )
    scores = [model.mean_log_likelihood(s) for s in per_window if len(s) >= 2]
    model.min_log_likelihood = min((s for s in scores if s is not None), default=0.0)
    logger.info(
        "Detano trained on %s windows: %s symbols, %s bigrams, min log-likelihood %.4f",
        len(windows), len(model.symbols), len(probabilities), model.min_log_likelihood,
    )
    return model


def detano_detect(model: Optional[AutomatonModel], packets: Sequence[PacketMeta], windows: Sequence[Window]) -> List[Verdict]:
    if model is None or not model.probabilities:
        raise DetectorError("Detano model is not trained")
    if windows and windows[0].size != model.window_size:
        raise DetectorError("window size differs from the trained model")
    verdicts: List[Verdict] = []
    for window, chunk in zip(windows, bucket(packets, windows)):
        symbols = _symbols(chunk)
        flagged = any(symbol not in model.symbols for symbol in symbols)
        if not flagged and len(symbols) >= 2:
            score = model.mean_log_likelihood(symbols)
            flagged = score is None or score < model.min_log_likelihood - model.tolerance
        verdicts.append(Verdict(window.start, window.end, flagged))
    flagged_count = sum(v.flagged for v in verdicts)
    if flagged_count:
        detector_flags_total.labels(detector="detano").inc(flagged_count)
    return verdicts


__all__ = ["AutomatonModel", "detano_detect", "detano_train"]
