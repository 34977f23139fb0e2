"""Ciphertext length model."""
from __future__ import annotations

DEFAULT_OVERHEAD = 29


def ciphertext_length(payload_length: int, overhead: int = DEFAULT_OVERHEAD) -> int:
    """Wire length of one encrypted record carrying ``payload_length`` bytes.

    Affine in the payload, so distinct payload lengths stay distinct on the wire.
    """

    if payload_length < 0:
        raise ValueError("payload_length must be non-negative")
    if overhead < 0:
        raise ValueError("overhead must be non-negative")
    return payload_length + overhead
