"""Nearest-neighbour detector over per-window packet counts of device pairs."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DetectorError
from ..metrics import detector_flags_total
from ..wire.capture import PacketMeta
from .windows import Verdict, Window, bucket

logger = logging.getLogger(__name__)

Flow = Tuple[str, str]


@dataclass
class NndModel:
    flows: Tuple[Flow, ...]
    vectors: np.ndarray
    threshold: float
    window_size: int

    def featurize(self, windows: Sequence[Sequence[PacketMeta]]) -> np.ndarray:
        return _count_matrix(windows, {flow: i for i, flow in enumerate(self.flows)})


def _count_matrix(windows: Sequence[Sequence[PacketMeta]], columns: Dict[Flow, int]) -> np.ndarray:
    # last column collects flows never seen in training
    matrix = np.zeros((len(windows), len(columns) + 1), dtype=np.int64)
    other = len(columns)
    for row, packets in enumerate(windows):
        for pkt in packets:
            matrix[row, columns.get(pkt.flow, other)] += 1
    return matrix


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _nearest(a: np.ndarray, b: np.ndarray, *, skip: Optional[np.ndarray] = None, chunk: int = 128) -> np.ndarray:
    """Smallest squared distance from each row of ``a`` to the rows of ``b``.

    ``skip[i]`` names a row of ``b`` that row ``i`` must not be matched with.
    """

    out = np.empty(len(a), dtype=np.int64)
    for start in range(0, len(a), chunk):
        d2 = _squared_distances(a[start : start + chunk], b)
        if skip is not None:
            rows = np.arange(len(d2))
            d2[rows, skip[start : start + chunk]] = np.iinfo(np.int64).max
        out[start : start + chunk] = d2.min(axis=1)
    return out


def nnd_train(
    packets: Sequence[PacketMeta],
    windows: Sequence[Window],
    *,
    safety_factor: float = 1.0,
) -> NndModel:
    """Store the training count vectors and the leave-one-out nearest-neighbour radius."""

    if not windows or not packets:
        raise DetectorError("empty training traffic", error_class="empty_training")
    flows = tuple(sorted({pkt.flow for pkt in packets}))
    vectors = _count_matrix(bucket(packets, windows), {flow: i for i, flow in enumerate(flows)})
    unique, counts = np.unique(vectors, axis=0, return_counts=True)
    loo = np.zeros(len(unique), dtype=np.int64)
    singles = np.flatnonzero(counts == 1)
    if len(unique) > 1 and len(singles):
        loo[singles] = _nearest(unique[singles], unique, skip=singles)
    threshold = math.sqrt(int(loo.max())) * safety_factor if len(loo) else 0.0
    size = windows[0].size
    logger.info(
        "NND trained on %s windows of %ss (%s distinct), threshold %.3f",
        len(windows), size // 1_000_000, len(unique), threshold,
    )
    return NndModel(flows, unique, threshold, size)


def nnd_detect(model: NndModel, packets: Sequence[PacketMeta], windows: Sequence[Window]) -> List[Verdict]:
    if model is None:
        raise DetectorError("NND model is not trained")
    if not windows:
        return []
    if windows[0].size != model.window_size:
        raise DetectorError("window size differs from the trained model")
    live = model.featurize(bucket(packets, windows))
    nearest = _nearest(live, model.vectors)
    verdicts = [
        Verdict(window.start, window.end, math.sqrt(d2) > model.threshold)
        for window, d2 in zip(windows, nearest.tolist())
    ]
    flagged = sum(v.flagged for v in verdicts)
    if flagged:
        detector_flags_total.labels(detector="nnd").inc(flagged)
    return verdicts


__all__ = ["NndModel", "nnd_detect", "nnd_train"]
