"""Acceptance battery: one criterion per test, one pass/fail line each.

The KPI-trend criterion runs the full desk-scale campaign (5 paired seeds,
60 s simulated per run) and dominates the suite's runtime; everything else
is oracle arithmetic and scripted traces.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from mobchan.beamforming import (
    ArrayGeometry,
    Beam,
    DEFAULT_BEAM_ELEVATIONS_DEG,
    DEFAULT_GAIN_FIT,
    ISOTROPIC,
    apply_gain_model,
    default_beam_set,
    fit_gain_model,
    single_ray_gain,
)
from mobchan.campaign import build_campaign_lut
from mobchan.channel_stats import (
    SyntheticTupleParams,
    scale_coherence_time,
    synthesize_tuple_library,
)
from mobchan.fading import (
    empirical_autocorrelation,
    estimate_envelope_stats,
    generate_multipath_envelope,
    theoretical_autocorrelation,
)
from mobchan.handover import A3Tracker, MobilityThresholds, RlfMonitor
from mobchan.scenario import desk_scenario
from mobchan.simulator import SimConfig, run_simulation

F_MAX = 25.93
KMH = 1000.0 / 3600.0


def _verdict(num: int, label: str, ok: bool, detail: str = ""):
    line = f"[criterion {num}] {label}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def test_criterion_1_envelope_statistics():
    t0 = time.time()
    worst = []
    ok = True
    for l in (1, 2, 4, 8, 16):
        proc = generate_multipath_envelope(
            path_diversity=l, sinusoids_per_path=512, f_max_hz=F_MAX,
            duration_s=1000.0, sample_period_s=1e-3, seed=100 + l,
        )
        assert len(proc.samples) == 1_000_000
        mean_err = abs(proc.samples.mean() - 1.0)
        var_err = abs(proc.samples.var() - 1.0 / l)
        ok &= mean_err <= 0.02 and var_err <= 0.05 / l
        worst.append((l, mean_err, var_err))
    elapsed = time.time() - t0
    ok &= elapsed <= 30.0
    _verdict(1, "envelope mean/variance for L in {1,2,4,8,16}", ok,
             f"{elapsed:.1f} s")


def test_criterion_2_autocorrelation():
    proc = generate_multipath_envelope(1, 512, F_MAX, 1000.0, 1e-3, seed=101)
    first_zero_lag = 2.40483 / (2 * math.pi * F_MAX)  # 14.76 ms
    max_lag = int(first_zero_lag / proc.sample_period_s)
    emp = empirical_autocorrelation(proc.samples, max_lag)
    lags = np.arange(max_lag + 1) * proc.sample_period_s
    theo = theoretical_autocorrelation(F_MAX, lags)
    rmse = float(np.sqrt(np.mean((emp - theo) ** 2)))
    _verdict(2, "empirical autocorrelation vs squared-Bessel oracle",
             rmse <= 0.05, f"RMSE {rmse:.4f}")


def test_criterion_3_coherence_time():
    proc = generate_multipath_envelope(1, 512, F_MAX, 1000.0, 1e-3, seed=101)
    tc = estimate_envelope_stats(proc).estimated_coherence_time_s
    ok = abs(tc - 6.906e-3) / 6.906e-3 <= 0.15
    scaled = scale_coherence_time(6.906e-3, 28e9, 1 * KMH, 28e9, 30 * KMH)
    ok &= math.isclose(scaled, 6.906e-3 / 30.0, rel_tol=1e-12)
    ok &= abs(scaled - 0.2302e-3) / 0.2302e-3 < 1e-3
    _verdict(3, "coherence time estimate and speed scaling", ok,
             f"Tc {tc * 1e3:.3f} ms, scaled {scaled * 1e6:.1f} us")


def test_criterion_4_round_trip_diversity():
    recovered = {}
    for l in (1, 2, 4, 8):
        proc = generate_multipath_envelope(l, 512, F_MAX, 100.0, 1e-3,
                                           seed=200 + l)
        recovered[l] = estimate_envelope_stats(proc).estimated_path_diversity
    ok = all(recovered[l] == l for l in recovered)
    _verdict(4, "exact path-diversity recovery for L in {1,2,4,8}", ok,
             str(recovered))


def test_criterion_5_beamforming():
    beam = Beam(1, 7.5, 90.0, ArrayGeometry(16, 8))
    g = single_ray_gain(beam, 7.5, 90.0, ISOTROPIC)
    ok = abs(g - 10 * math.log10(128)) <= 0.01

    beams = default_beam_set()
    ok &= tuple(b.elevation_deg for b in beams) == DEFAULT_BEAM_ELEVATIONS_DEG
    ok &= all((b.geometry.panel_rows, b.geometry.panel_cols) == (16, 8)
              and b.azimuth_deg == 90.0 for b in beams[:8])
    ok &= all((b.geometry.panel_rows, b.geometry.panel_cols) == (8, 4)
              and b.azimuth_deg == 97.0 for b in beams[8:])
    _verdict(5, "boresight gain 21.07 dB and 12-beam table", ok,
             f"boresight {g:.4f} dB")


def test_criterion_6_gain_fit():
    gs = np.linspace(-15.0, 22.0, 60)
    model = fit_gain_model([(g, 0.7 * g - 1.5) for g in gs], "NLOS")
    ok = abs(model.slope - 0.7) / 0.7 <= 1e-6
    ok &= abs(model.intercept_db - (-1.5)) / 1.5 <= 1e-6
    ok &= float(apply_gain_model(DEFAULT_GAIN_FIT["LOS"], -50.0)) == -20.0
    ok &= float(apply_gain_model(DEFAULT_GAIN_FIT["NLOS"], -50.0)) == 0.0
    _verdict(6, "OLS recovery to 1e-6 and -20/0 dB clamp floors", ok)


def test_criterion_7_state_machines():
    t0 = time.time()
    tick = 0.01
    thr = MobilityThresholds()

    a3 = A3Tracker(3.0, 0.08)
    fired_at = None
    for n in range(1, 20):
        if a3.update(-80.0, {1: -76.0}, tick) is not None:
            fired_at = n * tick
            break
    ok = fired_at == pytest.approx(0.08)

    eq = A3Tracker(3.0, 0.08)
    ok &= all(eq.update(-80.0, {1: -77.0}, tick) is None for _ in range(50))

    rlf = RlfMonitor(thr)
    rlf.update(-10.0, tick)  # t310_start
    declared_at = None
    for n in range(2, 100):
        if rlf.update(-10.0, tick) == "rlf":
            declared_at = n * tick
            break
    ok &= declared_at == pytest.approx(0.6)

    cancel = RlfMonitor(thr)
    cancel.update(-10.0, tick)
    ok &= cancel.update(thr.qin_db + 0.5, tick) == "t310_stop"
    ok &= not cancel.running
    elapsed = time.time() - t0
    ok &= elapsed < 1.0
    _verdict(7, "A3 time-to-trigger and T310 timing on scripted traces", ok,
             f"{elapsed * 1e3:.0f} ms")


def test_criterion_8_kpi_trends():
    t0 = time.time()
    base = desk_scenario()
    library = synthesize_tuple_library(
        50, 12, seed=7,
        params=SyntheticTupleParams(l_mode_strongest=18, l_mode_weakest=24),
    )
    lut = build_campaign_lut(base, {})
    seeds = [1, 2, 3, 4, 5]

    def battery(cfg):
        n_ho = n_rlf = 0
        for s in seeds:
            scen = replace(base, sim=replace(base.sim, seed=s))
            r = run_simulation(scen, cfg)
            n_ho += r.n_ho
            n_rlf += r.n_rlf
        return n_ho, n_rlf

    ff = dict(fading=True, library=library)
    ho_ref, rlf_ref = battery(SimConfig())
    _, rlf_l3 = battery(SimConfig(l3=True, t_alpha_s=0.1))
    ho_jakes = {
        l: battery(SimConfig(**ff, channel_model="jakes", jakes_l=l))[0]
        for l in (2, 4, 8, 16)
    }
    ho_simp, rlf_single = battery(
        SimConfig(**ff, channel_model="simplified", lut=lut)
    )
    _, rlf_fit = battery(
        SimConfig(**ff, channel_model="simplified", lut=lut,
                  gain_model="fitting")
    )
    sweep = [
        battery(SimConfig(**ff, channel_model="simplified", lut=lut,
                          measurement_error=True, l3=True,
                          t_alpha_s=ta / 1000.0))[0]
        for ta in (100, 50, 20, 10, 5)
    ]
    elapsed = time.time() - t0

    seq = [ho_jakes[l] for l in (2, 4, 8, 16)]
    lo, hi = sorted((ho_jakes[8], ho_jakes[16]))
    trends = {
        "a_ff_raises_ho": ho_simp > ho_ref,
        "b_ho_nonincreasing_in_l": all(x >= y for x, y in zip(seq, seq[1:])),
        "c_simplified_within_l8_l16": lo <= ho_simp <= hi,
        "d_fitting_raises_rlf": rlf_fit > rlf_single,
        "e_l3_raises_rlf": rlf_l3 > rlf_ref,
        "f_ho_grows_as_t_alpha_shrinks": all(
            x <= y for x, y in zip(sweep, sweep[1:])
        ),
        "runtime_under_10_min": elapsed <= 600.0,
    }
    detail = (
        f"ref {ho_ref}/{rlf_ref}, simp {ho_simp}/{rlf_single}, "
        f"fit rlf {rlf_fit}, L3 rlf {rlf_l3}, jakes {seq}, sweep {sweep}, "
        f"{elapsed:.0f} s"
    )
    _verdict(8, "paired-seed mobility KPI trends (a)-(f)", all(trends.values()),
             detail + "; " + ", ".join(k for k, v in trends.items() if not v))


def test_criterion_9_campaign_determinism(tmp_path):
    import io
    import os

    from mobchan.campaign import load_campaign, run_campaign

    yaml_doc = """
scenario: desk
duration_s: 2.0
cases:
  - {name: Reference}
  - {name: FF, ff: true}
models: [simplified]
seeds: [1, 2]
tuples:
  synthetic: {m: 4, b: 12, seed: 5}
lut: {diversities: [1, 2], n_coherence: 2, duration_s: 0.25}
"""
    contents = []
    for name in ("a", "b"):
        cfg = load_campaign(io.StringIO(yaml_doc))
        cfg.out_dir = str(tmp_path / name)
        run_campaign(cfg)
        blob = {}
        for fn in sorted(os.listdir(cfg.out_dir)):
            with open(os.path.join(cfg.out_dir, fn), "rb") as f:
                blob[fn] = f.read()
        contents.append(blob)
    ok = contents[0] == contents[1] and any(
        fn.startswith("events_") for fn in contents[0]
    )
    _verdict(9, "byte-identical campaign outputs on repeat", ok,
             f"{len(contents[0])} files compared")
