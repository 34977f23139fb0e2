"""The targeted blackhole adversary: passive profiling and the active drop phase."""

from .attack import (
    AttackReport,
    CandidateTracker,
    OnlineTracker,
    Sniper,
    assess_deviation,
    execute_drop,
    score,
    track_online,
)
from .lts import Lts, LtsState, merge_candidates, read_lts_csv, write_lts_csv
from .mining import mine_patterns
from .profiling import (
    IdMap,
    SniperProfile,
    assign_ids,
    build_profile,
    consistent_sequence,
    dedup_retransmissions,
    segment_cycles,
)

__all__ = [
    "AttackReport",
    "CandidateTracker",
    "IdMap",
    "Lts",
    "LtsState",
    "OnlineTracker",
    "Sniper",
    "SniperProfile",
    "assess_deviation",
    "assign_ids",
    "build_profile",
    "consistent_sequence",
    "dedup_retransmissions",
    "execute_drop",
    "merge_candidates",
    "mine_patterns",
    "read_lts_csv",
    "score",
    "segment_cycles",
    "track_online",
    "write_lts_csv",
]
