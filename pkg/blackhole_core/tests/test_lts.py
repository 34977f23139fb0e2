from __future__ import annotations

import pandas as pd

from blackhole_core.app.core.sniper import Lts, LtsState, merge_candidates, read_lts_csv, write_lts_csv


def test_merge_folds_repeated_state_groups() -> None:
    patterns = [(1, 2), (3, 4), (5, 6), (3, 4), (5, 6)]
    reps = [2, 2, 2, 2, 2]
    run = (3, 4, 3, 4, 5, 6, 5, 6)

    candidates = merge_candidates(patterns, reps)

    assert [c.state_count for c in candidates] == [2, 2, 4, 4, 5]
    full, intermediate, fold_first, fold_last, base = candidates
    assert full.states == (LtsState((1, 2), 2), LtsState(run * 2, 1))
    assert intermediate.states == (LtsState((1, 2), 2), LtsState(run, 2))
    assert fold_first.states[1] == LtsState(run, 1)
    assert fold_last.states[3] == LtsState(run, 1)
    assert base == Lts.from_patterns(patterns, reps)
    assert all(c.expand() == base.expand() for c in candidates)


def test_nested_runs_are_folded_level_by_level() -> None:
    candidates = merge_candidates([(1, 2), (3, 4)] * 4, [1] * 8)

    counts = [c.state_count for c in candidates]
    assert counts == sorted(counts)
    assert counts[0] == 1 and counts[-1] == 8
    assert Lts((LtsState((1, 2, 3, 4), 4),)) in candidates
    assert Lts((LtsState((1, 2, 3, 4, 1, 2, 3, 4), 2),)) in candidates
    assert len({c.states for c in candidates}) == len(candidates)
    assert all(c.expand() == [1, 2, 3, 4] * 4 for c in candidates)


def test_distinct_patterns_yield_a_single_candidate() -> None:
    candidates = merge_candidates([(1, 2), (3, 4), (5, 6)], [3, 125, 15226])

    assert len(candidates) == 1
    assert candidates[0].repetitions == [3, 125, 15226]


def test_lts_reproduces_its_own_expansion() -> None:
    lts = Lts.from_patterns([(1, 2), (3, 4)], [2, 3])

    assert lts.reproduces([1, 2, 1, 2, 3, 4, 3, 4, 3, 4])
    assert not lts.reproduces([1, 2, 3, 4])
    assert lts.index_of((3, 4)) == 1
    assert lts.index_of((9, 9)) is None


def test_lts_csv_uses_colon_separated_ids(tmp_path) -> None:
    lts = Lts.from_patterns([(1, 2), (3, 4, 5, 6)], [3, 125])
    path = write_lts_csv(lts, tmp_path / "lts.csv")

    frame = pd.read_csv(path, dtype=str)
    assert list(frame.columns) == ["state_index", "repetitions", "ids_colon_separated"]
    assert frame["ids_colon_separated"].tolist() == ["1:2", "3:4:5:6"]
    assert read_lts_csv(path) == lts
