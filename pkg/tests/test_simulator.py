"""Simulator configuration, SINR arithmetic, event log and KPI tests."""

import io

import numpy as np
import pytest

from mobchan.channel_stats import (
    build_fading_lut,
    synthesize_tuple_library,
)
from mobchan.fading import generate_multipath_envelope
from mobchan.scenario import desk_scenario
from mobchan.simulator import (
    KpiReport,
    SimConfig,
    Simulator,
    kpis_from_event_log,
    run_simulation,
    write_event_log,
)


def test_sim_config_validation():
    sc = desk_scenario(duration_s=1.0)
    with pytest.raises(ValueError):
        SimConfig(channel_model="ray-tracing").validate(sc)
    with pytest.raises(ValueError):
        SimConfig(gain_model="ideal").validate(sc)
    with pytest.raises(ValueError):
        SimConfig(channel_model="jakes", jakes_l=0).validate(sc)
    with pytest.raises(ValueError):
        SimConfig(l3=True, t_alpha_s=0.0).validate(sc)
    with pytest.raises(ValueError):  # fading on simplified needs library + LUT
        SimConfig(fading=True).validate(sc)
    SimConfig().validate(sc)
    SimConfig(fading=True, channel_model="jakes", jakes_l=4).validate(sc)


def test_sinr_examples():
    sim = Simulator(desk_scenario(duration_s=1.0), SimConfig())
    rsrp = np.full((sim.n_ues, sim.n_cells), -200.0)
    p_int = np.zeros((sim.n_ues, sim.n_cells))
    # noise-limited: -87 dBm over -97 dBm noise is +10 dB
    rsrp[0, 0] = -87.0
    assert sim.sinr_db(rsrp, p_int, 0, 0) == pytest.approx(10.0)
    # one interferer at the serving power: ratio pinned near 0 dB
    rsrp[0, 0] = -80.0
    p_int[0, 1] = 10 ** (-80.0 / 10.0)
    assert sim.sinr_db(rsrp, p_int, 0, 0) == pytest.approx(0.0, abs=0.1)
    # the serving cell's own column never self-interferes
    p_int[0, 0] = 1e6
    assert sim.sinr_db(rsrp, p_int, 0, 0) == pytest.approx(0.0, abs=0.1)


def test_jensen_gap_moderate_for_l4():
    # dB of a unit-mean envelope has a small negative bias that shrinks with
    # diversity; at L=4 it stays well under 1.5 dB
    env = generate_multipath_envelope(4, 512, 100.0, 50.0, 1e-3, seed=2)
    bias = np.mean(10.0 * np.log10(env.samples))
    assert abs(bias) <= 1.5


def _crafted_report():
    events = [
        (1.0, 0, "OUTAGE_ENTER", ""),
        (1.5, 0, "HO_SUCCESS", "cell=3"),
        (2.0, 0, "OUTAGE_EXIT", ""),
        (4.0, 1, "RLF", "cell=0"),
        (6.0, 1, "HO_SUCCESS", "cell=3"),
        (9.5, 1, "OUTAGE_ENTER", ""),  # left open: closes at duration
    ]
    return KpiReport(
        n_ho=2, n_rlf=1, outage_percent=7.5, duration_s=10.0, n_ues=2,
        per_ue_outage_s=(1.0, 0.5), per_cell_ho={"cell=3": 2}, events=events,
    )


def test_kpis_from_event_log_outage_arithmetic():
    buf = io.StringIO()
    write_event_log(_crafted_report(), buf)
    buf.seek(0)
    report = kpis_from_event_log(buf)
    assert report.n_ho == 2
    assert report.n_rlf == 1
    # 1.0 s + 0.5 s outage over 2 UEs x 10 s
    assert report.outage_percent == pytest.approx(7.5)
    assert report.per_ue_outage_s == (1.0, 0.5)
    assert report.per_cell_ho == {"cell=3": 2}
    assert report.ho_per_ue_per_min == pytest.approx(6.0)
    assert report.rlf_per_ue_per_min == pytest.approx(3.0)


def test_event_log_rejects_malformed():
    with pytest.raises(ValueError):
        kpis_from_event_log(io.StringIO("t_s,ue_id,event,detail\n"))
    with pytest.raises(ValueError):
        kpis_from_event_log(io.StringIO("# duration_s=1.0, n_ues=2\nbad,cols\n"))


def test_run_is_deterministic():
    sc = desk_scenario(duration_s=2.0)
    cfg = SimConfig(measurement_error=True)
    a = run_simulation(sc, cfg)
    b = run_simulation(sc, cfg)
    assert a.events == b.events
    assert (a.n_ho, a.n_rlf, a.outage_percent) == (b.n_ho, b.n_rlf, b.outage_percent)


def test_run_seed_changes_outcome():
    from dataclasses import replace

    sc = desk_scenario(duration_s=2.0)
    cfg = SimConfig(measurement_error=True)
    a = run_simulation(sc, cfg)
    b = run_simulation(replace(sc, sim=replace(sc.sim, seed=99)), cfg)
    assert a.events != b.events


def test_event_log_round_trip_from_run():
    report = run_simulation(desk_scenario(duration_s=3.0), SimConfig(measurement_error=True))
    buf = io.StringIO()
    write_event_log(report, buf)
    buf.seek(0)
    back = kpis_from_event_log(buf)
    assert back.n_ho == report.n_ho
    assert back.n_rlf == report.n_rlf
    assert back.outage_percent == pytest.approx(report.outage_percent, abs=0.02)


@pytest.fixture(scope="module")
def small_fading_setup():
    lib = synthesize_tuple_library(5, 12, seed=7)
    lut = build_fading_lut((1, 4), (1e-3, 4e-3), 0.25, 1.0 / 6400.0, seed=11)
    return lib, lut


def test_simplified_fading_run(small_fading_setup):
    lib, lut = small_fading_setup
    sc = desk_scenario(duration_s=1.0)
    cfg = SimConfig(fading=True, library=lib, lut=lut)
    report = run_simulation(sc, cfg)
    assert report.duration_s == pytest.approx(1.0)
    assert report.n_ues == 12
    assert 0.0 <= report.outage_percent <= 100.0


def test_jakes_fading_run():
    sc = desk_scenario(duration_s=1.0)
    report = run_simulation(sc, SimConfig(fading=True, channel_model="jakes", jakes_l=2))
    assert report.n_ues == 12


def test_fitting_gain_floors_deep_sidelobes():
    # under the fitting model, deeply suppressed rays are lifted to the
    # floor: -20 dB on LOS links, 0 dB on NLOS links
    sim = Simulator(desk_scenario(duration_s=1.0), SimConfig(gain_model="fitting"))
    gains = np.full((sim.n_ues, sim.n_cells, sim.n_beams), -60.0)
    los = np.zeros((sim.n_ues, sim.n_cells), dtype=bool)
    los[0, :] = True
    eff = sim._effective_gains(gains, los)
    assert np.all(eff[0] == -20.0)
    assert np.all(eff[1:] == 0.0)
    # the single-ray model passes gains through untouched
    single = Simulator(desk_scenario(duration_s=1.0), SimConfig())
    assert np.array_equal(single._effective_gains(gains, los), gains)
