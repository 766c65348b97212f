"""Scripted-trace tests of the A3, handover and RLF state machines."""

import pytest

from mobchan.handover import (
    A3Tracker,
    HandoverProcess,
    MobilityThresholds,
    RlfMonitor,
)

TICK = 0.01
THR = MobilityThresholds()


def test_a3_equality_never_triggers():
    a3 = A3Tracker(offset_db=3.0, time_to_trigger_s=0.08)
    for _ in range(100):
        assert a3.update(-80.0, {1: -77.0}, TICK) is None
    assert a3.timers[1] == 0.0


def test_a3_fires_exactly_at_time_to_trigger():
    a3 = A3Tracker(offset_db=3.0, time_to_trigger_s=0.08)
    for _ in range(7):
        assert a3.update(-80.0, {1: -76.0}, TICK) is None
    assert a3.update(-80.0, {1: -76.0}, TICK) == 1
    # all timers reset after the report
    assert a3.timers == {}


def test_a3_resets_on_condition_failure():
    a3 = A3Tracker(offset_db=3.0, time_to_trigger_s=0.08)
    for _ in range(7):
        a3.update(-80.0, {1: -76.0}, TICK)
    assert a3.update(-80.0, {1: -80.0}, TICK) is None  # fails at the last tick
    assert a3.timers[1] == 0.0
    for _ in range(7):
        assert a3.update(-80.0, {1: -76.0}, TICK) is None


def test_a3_reports_strongest_qualifying_neighbor():
    a3 = A3Tracker(offset_db=3.0, time_to_trigger_s=0.02)
    neighbors = {1: -75.0, 2: -73.0, 3: -85.0}
    assert a3.update(-80.0, neighbors, TICK) is None
    assert a3.update(-80.0, neighbors, TICK) == 2


def test_handover_success_path():
    ho = HandoverProcess(THR)
    assert ho.start(target=5, serving_sinr_db=10.0) == "accepted"
    assert ho.in_random_access
    results = [ho.step(10.0, TICK) for _ in range(4)]  # T_HO = 40 ms
    assert results == [None, None, None, "complete"]
    assert ho.completed_target == 5
    assert not ho.in_random_access


def test_handover_command_fails_below_qout():
    ho = HandoverProcess(THR)
    assert ho.start(target=5, serving_sinr_db=THR.qout_db) == "command_failed"
    assert not ho.in_random_access


def test_handover_random_access_fails_on_target_dip():
    ho = HandoverProcess(THR)
    ho.start(target=5, serving_sinr_db=10.0)
    assert ho.step(10.0, TICK) is None
    assert ho.step(THR.qout_db - 0.1, TICK) == "failed"
    assert not ho.in_random_access


def test_rlf_declared_at_exactly_t310():
    rlf = RlfMonitor(THR)
    assert rlf.update(-10.0, TICK) == "t310_start"
    for _ in range(58):
        assert rlf.update(-10.0, TICK) is None
    assert rlf.update(-10.0, TICK) == "rlf"  # 60 ticks = 600 ms
    assert not rlf.running


def test_rlf_cancelled_by_qin_crossing():
    rlf = RlfMonitor(THR)
    rlf.update(-10.0, TICK)
    for _ in range(30):
        rlf.update(-10.0, TICK)
    assert rlf.update(THR.qin_db + 0.1, TICK) == "t310_stop"
    assert not rlf.running


def test_rlf_hysteresis_keeps_timer_running():
    # oscillating between qout and qin: above out but not above in
    rlf = RlfMonitor(THR)
    assert rlf.update(-10.0, TICK) == "t310_start"
    events = [rlf.update(q, TICK) for q in [-7.0, -9.0] * 30]
    assert events[:58] == [None] * 58
    assert events[58] == "rlf"


def test_rlf_qin_boundary_does_not_cancel():
    rlf = RlfMonitor(THR)
    rlf.update(-10.0, TICK)
    assert rlf.update(THR.qin_db, TICK) is None  # equality is not "exceeds"
    assert rlf.running
