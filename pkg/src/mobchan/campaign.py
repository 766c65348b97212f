"""Simulation campaigns: case/model/seed grids with aggregated KPI output.

A campaign runs every (case x channel model x seed) cell of its grid on one
scenario, with paired seeds so cases and models see identical terminal
motion, and writes per-run KPI rows, per-seed aggregates and bar-chart
ready tables grouped by case and model.
"""

from __future__ import annotations

import csv
import os
import statistics
from dataclasses import dataclass, field

import yaml

from .beamforming import DEFAULT_GAIN_FIT
from .channel_stats import (
    DEFAULT_DIVERSITY_GRID,
    FadingLUT,
    SyntheticTupleParams,
    TupleLibrary,
    build_fading_lut,
    default_coherence_grid,
    f_max_for_coherence_time,
    ingest_tuples,
    synthesize_tuple_library,
)
from .fading import max_doppler_hz
from .scenario import Scenario, desk_scenario, load_scenario
from .simulator import KpiReport, SimConfig, run_simulation, write_event_log


@dataclass(frozen=True)
class CaseDef:
    name: str
    ff: bool = False
    me: bool = False
    l3: bool = False
    t_alpha_s: float = 0.1


@dataclass(frozen=True)
class ModelDef:
    """Channel-model variant: 'simplified' or 'jakes-<L>', plus gain model."""

    name: str
    channel_model: str
    jakes_l: int
    gain_model: str

    @staticmethod
    def parse(spec: str, default_gain: str = "single") -> "ModelDef":
        gain = default_gain
        base = spec
        if ":" in spec:
            base, gain = spec.split(":", 1)
        if gain not in ("single", "fitting"):
            raise ValueError(f"unknown gain model {gain!r} in {spec!r}")
        if base == "simplified":
            return ModelDef(spec, "simplified", 0, gain)
        if base.startswith("jakes-"):
            l = int(base.split("-", 1)[1])
            if l < 1:
                raise ValueError(f"jakes diversity must be >= 1 in {spec!r}")
            return ModelDef(spec, "jakes", l, gain)
        raise ValueError(f"unknown channel model {spec!r}")


@dataclass
class CampaignConfig:
    scenario: Scenario
    cases: list
    models: list
    seeds: list
    out_dir: str
    tuple_library: TupleLibrary | None = None
    lut_params: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [c.name for c in self.cases]
        if len(set(names)) != len(names):
            raise ValueError("case names must be unique")
        if not self.seeds:
            raise ValueError("campaign needs at least one seed")


def load_campaign(stream, base_dir: str = ".") -> CampaignConfig:
    d = yaml.safe_load(stream)
    scen_ref = d.get("scenario", "desk")
    if scen_ref == "desk":
        scenario = desk_scenario(duration_s=float(d.get("duration_s", 60.0)))
    else:
        path = os.path.join(base_dir, scen_ref)
        if not os.path.exists(path):
            raise ValueError(f"scenario file not found: {path}")
        with open(path) as f:
            scenario = load_scenario(f)
    cases = [
        CaseDef(
            name=c["name"],
            ff=bool(c.get("ff", False)),
            me=bool(c.get("me", False)),
            l3=bool(c.get("l3", False)),
            t_alpha_s=float(c.get("t_alpha_ms", 100.0)) / 1000.0,
        )
        for c in d.get("cases", [{"name": "Reference"}])
    ]
    default_gain = d.get("gain_model", "single")
    models = [ModelDef.parse(m, default_gain) for m in d.get("models", ["simplified"])]
    seeds = [int(s) for s in d.get("seeds", [1])]

    tup = d.get("tuples", {"synthetic": {}})
    if "file" in tup:
        path = os.path.join(base_dir, tup["file"])
        if not os.path.exists(path):
            raise ValueError(f"tuple file not found: {path}")
        with open(path) as f:
            library = ingest_tuples(f)
    else:
        syn = tup.get("synthetic", {})
        dist_keys = {
            k: syn[k] for k in (
                "tc_median_factor", "tc_sigma_log", "tc_floor_factor",
                "l_mode_strongest", "l_mode_weakest", "l_sigma", "l_max",
                "power_step_db",
            ) if k in syn
        }
        library = synthesize_tuple_library(
            n_tuples=int(syn.get("m", 50)),
            n_beams=int(syn.get("b", 12)),
            seed=int(syn.get("seed", 7)),
            params=SyntheticTupleParams(**dist_keys) if dist_keys else None,
        )
    return CampaignConfig(
        scenario=scenario,
        cases=cases,
        models=models,
        seeds=seeds,
        out_dir=d.get("out", "campaign_out"),
        tuple_library=library,
        lut_params=d.get("lut", {}),
    )


def build_campaign_lut(scenario: Scenario, params: dict) -> FadingLUT:
    """LUT sized to the scenario's fastest terminal at the sim carrier."""
    f_fast = max_doppler_hz(scenario.radio.carrier_hz, scenario.fastest_speed_mps)
    diversities = tuple(params.get("diversities", DEFAULT_DIVERSITY_GRID))
    coh = params.get("coherence_times_s")
    if coh is None:
        coh = default_coherence_grid(
            f_fast,
            n_points=int(params.get("n_coherence", 10)),
            lo_factor=float(params.get("lo_factor", 0.5)),
            hi_factor=float(params.get("hi_factor", 16.0)),
        )
    coh = tuple(float(t) for t in coh)
    sample_period = params.get("sample_period_s")
    if sample_period is None:
        sample_period = 1.0 / (16.0 * f_max_for_coherence_time(min(coh)))
    return build_fading_lut(
        diversity_grid=diversities,
        coherence_grid=coh,
        duration_s=float(params.get("duration_s", 2.0)),
        sample_period_s=float(sample_period),
        seed=int(params.get("seed", 11)),
        sinusoids_per_path=int(params.get("sinusoids_per_path", 64)),
    )


SUMMARY_COLUMNS = [
    "case", "model", "gain_model", "seed", "n_ho", "n_rlf", "outage_percent",
    "ho_per_ue_per_min", "rlf_per_ue_per_min",
]


def run_campaign(config: CampaignConfig, write_events: bool = True) -> list[dict]:
    """Run the full grid; returns one summary row dict per (case, model, seed)."""
    from dataclasses import replace

    os.makedirs(config.out_dir, exist_ok=True)
    needs_simplified = any(m.channel_model == "simplified" for m in config.models)
    lut = None
    if needs_simplified:
        lut = build_campaign_lut(config.scenario, config.lut_params)

    rows = []
    for case in config.cases:
        for model in config.models:
            for seed in config.seeds:
                scenario = replace(
                    config.scenario,
                    sim=replace(config.scenario.sim, seed=seed),
                )
                sim_cfg = SimConfig(
                    fading=case.ff,
                    measurement_error=case.me,
                    l3=case.l3,
                    t_alpha_s=case.t_alpha_s,
                    channel_model=model.channel_model,
                    jakes_l=model.jakes_l,
                    gain_model=model.gain_model,
                    library=config.tuple_library if case.ff else None,
                    lut=lut if case.ff else None,
                )
                report = run_simulation(scenario, sim_cfg)
                rows.append({
                    "case": case.name,
                    "model": model.name,
                    "gain_model": model.gain_model,
                    "seed": seed,
                    "n_ho": report.n_ho,
                    "n_rlf": report.n_rlf,
                    "outage_percent": f"{report.outage_percent:.4f}",
                    "ho_per_ue_per_min": f"{report.ho_per_ue_per_min:.4f}",
                    "rlf_per_ue_per_min": f"{report.rlf_per_ue_per_min:.4f}",
                })
                if write_events:
                    safe = f"{case.name}_{model.name}_{seed}".replace(" ", "_")
                    safe = safe.replace(":", "-").replace("+", "-")
                    with open(
                        os.path.join(config.out_dir, f"events_{safe}.csv"), "w"
                    ) as f:
                        write_event_log(report, f)
    _write_summary(config, rows)
    return rows


def _write_summary(config: CampaignConfig, rows: list[dict]) -> None:
    with open(os.path.join(config.out_dir, "kpi_summary.csv"), "w") as f:
        w = csv.DictWriter(f, SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    # aggregate mean and std over seeds
    agg_cols = ["case", "model", "gain_model",
                "n_ho_mean", "n_ho_std", "n_rlf_mean", "n_rlf_std",
                "outage_percent_mean", "outage_percent_std"]
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["case"], r["model"], r["gain_model"]), []).append(r)
    with open(os.path.join(config.out_dir, "kpi_aggregate.csv"), "w") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(agg_cols)
        for (case, model, gain), rs in groups.items():
            def stats(key, cast=float):
                vals = [cast(r[key]) for r in rs]
                mean = statistics.fmean(vals)
                std = statistics.pstdev(vals) if len(vals) > 1 else 0.0
                return f"{mean:.4f}", f"{std:.4f}"
            w.writerow([case, model, gain,
                        *stats("n_ho"), *stats("n_rlf"), *stats("outage_percent")])

    # bar-chart data: one file per KPI, rows = cases, columns = models
    model_names = [m.name for m in config.models]
    for kpi in ("n_ho", "n_rlf", "outage_percent"):
        with open(os.path.join(config.out_dir, f"bars_{kpi}.csv"), "w") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["case"] + model_names)
            for case in config.cases:
                out = [case.name]
                for m in config.models:
                    rs = groups.get((case.name, m.name, m.gain_model), [])
                    vals = [float(r[kpi]) for r in rs]
                    out.append(f"{statistics.fmean(vals):.4f}" if vals else "")
                w.writerow(out)


def summarize_tuple_library(library: TupleLibrary) -> str:
    """Per-rank medians of coherence time and diversity, for CLI output."""
    lines = []
    for cond in ("LOS", "NLOS"):
        tuples = library.tuples(cond)
        for rank in range(library.n_beams):
            tcs = sorted(t.rows[rank].coherence_time_s for t in tuples)
            ls = sorted(t.rows[rank].path_diversity for t in tuples)
            lines.append(
                f"{cond} rank {rank + 1}: median Tc "
                f"{statistics.median(tcs) * 1e3:.3f} ms, "
                f"median L {statistics.median(ls):.0f}"
            )
    return "\n".join(lines)
