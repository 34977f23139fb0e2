"""Detector baselines and their evaluation."""

from .detano import AutomatonModel, detano_detect, detano_train
from .evaluation import Evaluation, evaluate, quantization_bound
from .nnd import NndModel, nnd_detect, nnd_train
from .pad import Atom, InvariantSet, pad_check, pad_mine
from .windows import DEFAULT_WINDOW_SIZES_S, Verdict, Window, bucket, tile

__all__ = [
    "Atom",
    "AutomatonModel",
    "DEFAULT_WINDOW_SIZES_S",
    "Evaluation",
    "InvariantSet",
    "NndModel",
    "Verdict",
    "Window",
    "bucket",
    "detano_detect",
    "detano_train",
    "evaluate",
    "nnd_detect",
    "nnd_train",
    "pad_check",
    "pad_mine",
    "quantization_bound",
    "tile",
]
