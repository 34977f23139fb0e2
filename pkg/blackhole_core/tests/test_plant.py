from __future__ import annotations

import pytest

from blackhole_core.app.core.plant import (
    CYCLE_END,
    LOG_FIELDS,
    Hydraulics,
    Inbox,
    LastValueStore,
    Plant,
    PlantConfig,
    SubProcessState,
    TankState,
    TransitionGuard,
    build_swat_schedules,
    integrate_physics,
    plc_step,
    tolerate_delay,
)
from blackhole_core.app.core.plant.config import ADDRESSES, P1_STATES
from blackhole_core.app.core.plant.tanks import integrate_tank
from blackhole_core.app.core.simkernel.links import DropRule
from blackhole_core.app.core.wire.codec import ciphertext_length
from blackhole_core.runtime.scheduler import EventScheduler, seconds


@pytest.fixture(scope="module")
def baseline_plant() -> Plant:
    plant = Plant(PlantConfig(), EventScheduler())
    plant.schedule_cycles(0, 1)
    plant.run_until(seconds(7200))
    return plant


def _p1(schedules) -> SubProcessState:
    guards = {
        state: [TransitionGuard(target, seconds(30), frozenset(schedules[state].critical_slots))]
        for state, target in (("S11", "S12"), ("S12", "S13"), ("S13", CYCLE_END))
    }
    return SubProcessState("P1", "S11", P1_STATES, guards=guards)


def test_schedules_match_the_swat_layout() -> None:
    schedules = build_swat_schedules(PlantConfig())

    assert [len(schedules[s].slots) for s in P1_STATES] == [26, 30, 32]
    assert [len(schedules[s].critical_slots) for s in P1_STATES] == [6, 2, 2]
    assert [schedules[s].repetitions_before_transition for s in P1_STATES] == [3, 125, 15226]
    assert min(min(schedules[s].critical_slots) for s in P1_STATES) >= 4
    lengths = [slot.payload_length for s in P1_STATES for slot in schedules[s].slots]
    assert len(set(lengths)) == len(lengths)
    assert schedules["S11"].repetition_span() == 1_525_000
    assert schedules["S13"].repetition_span() == 1_855_000


def test_critical_slots_talk_to_the_expected_peers() -> None:
    schedules = build_swat_schedules(PlantConfig())

    s11_peers = {schedules["S11"].slots[i].peer for i in schedules["S11"].critical_slots}
    s12_kinds = {schedules["S12"].slots[i].kind for i in schedules["S12"].critical_slots}

    assert s11_peers == {"P2", "P3", "P4"}
    assert s12_kinds == {"S12.supply_grant_req", "S12.supply_grant"}


def test_plant_config_rejects_inverted_levels() -> None:
    with pytest.raises(ValueError):
        PlantConfig(functional_max_level=950.0)


def test_balanced_flows_keep_the_level_exact() -> None:
    tank = TankState(800.0)
    for _ in range(1000):
        integrate_tank(tank, 0.5, 0.5, 1.0)

    assert tank.level == 800.0


def test_overflow_onset_is_interpolated_inside_the_step() -> None:
    h = Hydraulics(t1=TankState(999.0, valve_open=True), t2=TankState(0.0), output=TankState(0.0, float("inf")))

    integrate_physics(h, 4.0)

    assert h.t1.overflowed
    assert h.t1.level == pytest.approx(1001.0)
    assert h.overflow_onset_s == pytest.approx(2.0)


def test_deadheaded_pump_moves_no_water() -> None:
    h = Hydraulics(
        t1=TankState(800.0, valve_open=True, pump_on=True),
        t2=TankState(0.0),
        output=TankState(0.0, float("inf")),
        t2_inlet_open=False,
    )

    integrate_physics(h, 10.0)

    assert h.t1.level == pytest.approx(805.0)
    assert h.t2.level == 0.0
    assert h.transferred == 0.0


def test_guard_needs_fresh_critical_receipts_from_the_final_repetition() -> None:
    schedules = build_swat_schedules(PlantConfig())
    plc = _p1(schedules)
    plc.repetition_counter = 3
    inbox = Inbox()
    critical = schedules["S11"].critical_slots
    for index in critical:
        inbox.record(index, 2, emit_time=0, delivered_at=10_000)

    held = plc_step(plc, schedules, inbox, {}, seconds(5))
    assert held.transition is None
    assert plc.repetition_counter == 4

    for index in critical:
        inbox.record(index, 4, emit_time=seconds(5), delivered_at=seconds(5) + seconds(31))
    stale = plc_step(plc, schedules, inbox, {}, seconds(40))
    assert stale.transition is None

    for index in critical:
        inbox.record(index, 5, emit_time=seconds(40), delivered_at=seconds(40) + 10_000)
    fired = plc_step(plc, schedules, inbox, {}, seconds(42))
    assert fired.transition == ("S11", "S12")
    assert plc.current_state == "S12"
    assert fired.repetition == 1
    assert len(fired.slots) == 30
    assert inbox.receipts == {}


def test_no_transition_before_the_configured_repetitions() -> None:
    schedules = build_swat_schedules(PlantConfig())
    plc = _p1(schedules)
    inbox = Inbox()
    for index in schedules["S11"].critical_slots:
        inbox.record(index, 3, emit_time=0, delivered_at=10_000)

    result = plc_step(plc, schedules, inbox, {}, 0)

    assert result.transition is None
    assert result.repetition == 1


def test_cycle_end_returns_to_the_first_state_without_slots() -> None:
    schedules = build_swat_schedules(PlantConfig(s13_repetitions=2))
    plc = _p1(schedules)
    plc.enter("S13")
    plc.repetition_counter = 2
    inbox = Inbox()
    for index in schedules["S13"].critical_slots:
        inbox.record(index, 2, emit_time=0, delivered_at=10_000)

    result = plc_step(plc, schedules, inbox, {}, seconds(10))

    assert result.transition == ("S13", CYCLE_END)
    assert result.slots == ()
    assert plc.current_state == "S11"


def test_guard_needs_a_trigger_or_a_sensor() -> None:
    with pytest.raises(ValueError):
        TransitionGuard("S23", seconds(30))


def test_sensor_predicate_must_hold_with_the_trigger() -> None:
    guard = TransitionGuard("S13", seconds(30), frozenset({4}), sensor=lambda sensors: sensors["LIT101"] >= 800.0)
    inbox = Inbox()

    assert not guard.satisfied(inbox, {"LIT101": 800.0}, 1)
    inbox.record(4, 1, emit_time=0, delivered_at=10_000)
    assert not guard.satisfied(inbox, {"LIT101": 799.9}, 1)
    assert guard.satisfied(inbox, {"LIT101": 800.0}, 1)
    assert TransitionGuard("S23", sensor=lambda sensors: True).satisfied(Inbox(), {}, 1)


def test_lost_message_is_recorded_against_the_reused_value() -> None:
    store = LastValueStore(defaults={"p2_state": "S21"})
    store.update("p2_state", "S22", seconds(1))

    store.record_loss("p2_state", seconds(5))

    assert store.lost_at == {"p2_state": seconds(5)}
    assert store.staleness["p2_state"] == seconds(4)
    assert tolerate_delay(store, "p2_state", seconds(6)) == "S22"
    store.update("p2_state", "S23", seconds(7))
    assert store.lost_at == {}


def test_last_value_is_reused_however_old() -> None:
    store = LastValueStore(defaults={"p2_state": "S21"})

    assert tolerate_delay(store, "p2_state", 0) == "S21"
    store.update("p2_state", "S22", seconds(1))
    assert tolerate_delay(store, "p2_state", seconds(3600)) == "S22"
    assert store.staleness["p2_state"] == seconds(3599)


def test_baseline_cycle_transitions_on_repetition_boundaries(baseline_plant: Plant) -> None:
    transitions = [(r.source, r.target, r.time, r.repetitions) for r in baseline_plant.p1_transitions()]

    assert transitions == [
        ("S11", "S12", 4_575_000, 3),
        ("S12", "S13", 4_575_000 + 125 * 1_745_000, 125),
    ]


def test_baseline_fills_t2_and_starts_output(baseline_plant: Plant) -> None:
    p2 = [(r.source, r.target, r.time) for r in baseline_plant.transitions if r.plc == "P2"]

    assert p2 == [("S21", "S22", 1_000_000), ("S22", "S23", 221_185_000)]
    assert baseline_plant.t2_full_times == [1_822_700_000]
    assert baseline_plant.coordination_lost_at == []
    assert baseline_plant.hydraulics.t2_inlet_open
    assert baseline_plant.output_volume() == pytest.approx(157.73, abs=0.01)
    assert not baseline_plant.hydraulics.t1.overflowed


def test_historian_log_holds_one_entry_per_second(baseline_plant: Plant) -> None:
    log = baseline_plant.log

    assert len(log) == 7200
    assert log[0].t_s == 0.0 and log[-1].t_s == 7199.0
    assert len(log[0].values) == len(LOG_FIELDS) == 21
    assert log[0]["P1_STATE"] == "S11"
    assert log[300]["LIT101"] == 800.0
    assert log[300]["MV101"] == "Open"
    assert log[300]["P101"] == "On"
    assert log[300]["LSH101"] == 1
    assert log[100]["MV101"] == "Open" and log[100]["P101"] == "Off"
    assert max(entry["LIT101"] for entry in log) == 800.0
    assert all(entry["SCADA_MODE"] == "AUTO" for entry in log)
    assert log[0]["AIT202"] == PlantConfig().ait202_ph
    assert log[5600]["P601"] == "Off" and log[5700]["P601"] == "On"
    assert log[221]["P2_STATE"] == "S22" and log[222]["P2_STATE"] == "S23"


def _drop_supply_request(plant: Plant, start_s: float, duration_s: float) -> None:
    slot = plant.schedules["S12"].slots[plant.supply_request_slot]
    src, dst = ADDRESSES[slot.src], ADDRESSES[slot.dst]
    plant.links[(src, dst)].adversary_rule = DropRule(
        target_state=1,
        match=frozenset({(ciphertext_length(slot.payload_length), src, dst)}),
        start=seconds(start_s),
        max_duration=seconds(duration_s),
    )


def test_p2_waits_for_the_supply_request_within_its_tolerance() -> None:
    plant = Plant(PlantConfig(), EventScheduler())
    plant.schedule_cycles(0, 1)
    _drop_supply_request(plant, 200.0, 240.0)

    plant.run_until(seconds(1000))

    p2_ready = [r.time for r in plant.transitions if r.plc == "P2" and r.target == "S23"]
    assert len(p2_ready) == 1 and seconds(440) < p2_ready[0] < seconds(445)
    assert plant.coordination_lost_at == []
    assert plant.hydraulics.t2_inlet_open
    assert plant.hydraulics.t1.level == pytest.approx(800.0)


def test_stalled_supply_request_breaks_p2_coordination() -> None:
    plant = Plant(PlantConfig(), EventScheduler())
    plant.schedule_cycles(0, 1)
    _drop_supply_request(plant, 200.0, 600.0)

    plant.run_until(seconds(1500))

    # first S12 request reaches P2 at 4.585 s; 125 repetitions of 1.745 s plus 300 s
    assert plant.coordination_lost_at == [522_710_000]
    assert not plant.hydraulics.t2_inlet_open
    p2_ready = [r.time for r in plant.transitions if r.plc == "P2" and r.target == "S23"]
    assert len(p2_ready) == 1 and p2_ready[0] > seconds(800)
    s13_entry = [r.time for r in plant.p1_transitions() if r.target == "S13"][0]
    assert plant.hydraulics.t1.level == pytest.approx(800.0 + 0.5 * (1500 - s13_entry / 1e6), abs=0.01)
    assert plant.hydraulics.t1.overflowed
    assert plant.hydraulics.t2.level == 0.0
    assert plant.t2_full_times == []


def test_finally_lost_status_reply_marks_the_view_stale() -> None:
    plant = Plant(PlantConfig(), EventScheduler())
    plant.schedule_cycles(0, 1)
    slot = plant.schedules["S11"].slots[1]
    src, dst = ADDRESSES[slot.src], ADDRESSES[slot.dst]
    plant.links[(src, dst)].adversary_rule = DropRule(
        target_state=0,
        match=frozenset({(ciphertext_length(slot.payload_length), src, dst)}),
        start=0,
        max_duration=seconds(60),
    )

    plant.run_until(1_100_000)

    assert slot.kind == "S11.p2_status_resp0"
    # emitted at 55 ms, five retransmissions 200 ms apart
    assert plant.view.lost_at == {"p2_state": 1_055_000}
    assert plant.transport.lost == 1
    # the last status reply of the repetition arrived at 835 ms
    assert plant.view.staleness["p2_state"] == 220_000
    assert tolerate_delay(plant.view, "p2_state", 1_100_000) == "S21"
