"""Pytest configuration for the blackhole emulation tests."""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Callable, List, Tuple

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[2]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from blackhole_core.app.core.wire.capture import PacketMeta  # noqa: E402

PacketRow = Tuple[int, int, str, str]


def pytest_configure(config: pytest.Config) -> None:  # pragma: no cover - pytest hook
    """Register custom markers used across the test-suite."""

    config.addinivalue_line("markers", "slow: full-cycle simulations (minutes of wall clock)")


@pytest.fixture
def make_packets() -> Callable[[List[PacketRow]], List[PacketMeta]]:
    """Packets from ``(time_us, length, src, dst)`` rows with per-flow sequence numbers."""

    def build(rows: List[PacketRow]) -> List[PacketMeta]:
        seqs: dict = {}
        out = []
        for time_us, length, src, dst in rows:
            seq = seqs.get((src, dst), 0)
            seqs[(src, dst)] = seq + 1
            out.append(PacketMeta(capture_time=time_us, src=src, dst=dst, wire_length=length, seq=seq))
        return out

    return build


@pytest.fixture(scope="session")
def profile_run():
    """Three profiled cycles with benign fluctuations in the second one."""

    from blackhole_core.app.services.scenarios import ScenarioConfig, run_profile

    return run_profile(ScenarioConfig(scenario="profile"))
