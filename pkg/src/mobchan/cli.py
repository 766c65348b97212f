"""Command-line front end.

Subcommands: gen-tuples, build-lut, fit-gain, run, analyze.
Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import campaign as campaign_mod
from .beamforming import DEFAULT_FLOOR_DB, GainFitModel, fit_gain_model
from .channel_stats import (
    SyntheticTupleParams,
    build_fading_lut,
    export_tuples,
    f_max_for_coherence_time,
    ingest_tuples,
    save_fading_lut,
    synthesize_tuple_library,
)
from .simulator import kpis_from_event_log

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="configuration file (YAML)")
    p.add_argument("--seed", type=int, help="seed override")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mobchan",
        description="Fading/beamforming channel models and mobility simulation",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-tuples", help="generate or re-export a tuple library")
    _add_common(p)
    p.add_argument("--synthetic", action="store_true",
                   help="draw a synthetic library instead of ingesting a file")
    p.add_argument("--input", help="existing tuple CSV to ingest and re-export")
    p.add_argument("--m", type=int, default=50, help="tuples per condition")
    p.add_argument("--b", type=int, default=12, help="beam rows per tuple")
    p.add_argument("--ref-carrier-ghz", type=float, default=28.0)
    p.add_argument("--ref-speed-kmh", type=float, default=1.0)
    p.add_argument("--l-mode-strongest", type=int, default=6)
    p.add_argument("--l-mode-weakest", type=int, default=20)
    p.add_argument("--tc-median-factor", type=float, default=4.0)
    p.set_defaults(func=cmd_gen_tuples)

    p = sub.add_parser("build-lut", help="pre-generate the fading look-up table")
    _add_common(p)
    p.add_argument("--diversities", default="1,2,4,8,16,32",
                   help="comma-separated path diversities")
    p.add_argument("--coherence-times-ms", required=True,
                   help="comma-separated coherence times in ms")
    p.add_argument("--duration-s", type=float, default=2.0)
    p.add_argument("--sample-period-s", type=float,
                   help="default: 1/(16 f_max) of the smallest coherence time")
    p.add_argument("--sinusoids", type=int, default=64)
    p.set_defaults(func=cmd_build_lut)

    p = sub.add_parser("fit-gain", help="fit the gain deviation model from samples")
    _add_common(p)
    p.add_argument("--samples", required=True,
                   help="CSV: condition,g_single_db,g_multipath_db")
    p.add_argument("--plot-data", help="scatter+line CSV output path")
    p.set_defaults(func=cmd_fit_gain)

    p = sub.add_parser("run", help="run a simulation campaign")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="recompute KPIs from an event log")
    _add_common(p)
    p.add_argument("--events", required=True, help="event log CSV")
    p.set_defaults(func=cmd_analyze)
    return ap


def cmd_gen_tuples(args) -> int:
    if not args.synthetic and not args.input:
        raise ValueError("gen-tuples needs --synthetic or --input")
    if not args.out:
        raise ValueError("gen-tuples needs --out")
    if args.synthetic:
        params = SyntheticTupleParams(
            tc_median_factor=args.tc_median_factor,
            l_mode_strongest=args.l_mode_strongest,
            l_mode_weakest=args.l_mode_weakest,
        )
        library = synthesize_tuple_library(
            n_tuples=args.m,
            n_beams=args.b,
            seed=args.seed if args.seed is not None else 7,
            params=params,
            ref_carrier_hz=args.ref_carrier_ghz * 1e9,
            ref_speed_mps=args.ref_speed_kmh * 1000.0 / 3600.0,
        )
    else:
        with open(args.input) as f:
            library = ingest_tuples(f)
    with open(args.out, "w") as f:
        export_tuples(library, f)
    print(campaign_mod.summarize_tuple_library(library))
    return EXIT_OK


def cmd_build_lut(args) -> int:
    if not args.out:
        raise ValueError("build-lut needs --out")
    diversities = [int(v) for v in args.diversities.split(",")]
    coherence = [float(v) / 1000.0 for v in args.coherence_times_ms.split(",")]
    period = args.sample_period_s
    if period is None:
        period = 1.0 / (16.0 * f_max_for_coherence_time(min(coherence)))
    lut = build_fading_lut(
        diversity_grid=diversities,
        coherence_grid=sorted(coherence),
        duration_s=args.duration_s,
        sample_period_s=period,
        seed=args.seed if args.seed is not None else 11,
        sinusoids_per_path=args.sinusoids,
    )
    save_fading_lut(lut, args.out)
    print(f"wrote {len(diversities) * len(coherence)} envelopes to {args.out}")
    return EXIT_OK


def cmd_fit_gain(args) -> int:
    if not args.out:
        raise ValueError("fit-gain needs --out")
    samples = {"LOS": [], "NLOS": []}
    with open(args.samples) as f:
        r = csv.reader(f)
        header = next(r, None)
        if header != ["condition", "g_single_db", "g_multipath_db"]:
            raise ValueError(f"bad gain-sample header: {header!r}")
        for row in r:
            if not row:
                continue
            samples[row[0]].append((float(row[1]), float(row[2])))
    models = {}
    for cond, pts in samples.items():
        if pts:
            models[cond] = fit_gain_model(pts, cond)
    if not models:
        raise ValueError("no gain samples found")
    with open(args.out, "w") as f:
        json.dump(
            {
                cond: {
                    "condition": m.condition,
                    "slope": m.slope,
                    "intercept_db": m.intercept_db,
                    "floor_db": m.floor_db,
                }
                for cond, m in models.items()
            },
            f, indent=1, sort_keys=True,
        )
    if args.plot_data:
        with open(args.plot_data, "w") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["condition", "g_single_db", "g_multipath_db", "g_fit_db"])
            for cond, pts in samples.items():
                if cond not in models:
                    continue
                for gs, gm in sorted(pts):
                    w.writerow([cond, repr(gs), repr(gm),
                                repr(float(models[cond](gs)))])
    for cond, m in models.items():
        print(f"{cond}: slope={m.slope:.4f} intercept={m.intercept_db:.4f} dB "
              f"floor={m.floor_db:.1f} dB")
    return EXIT_OK


def load_gain_models(path: str) -> dict:
    with open(path) as f:
        d = json.load(f)
    return {
        cond: GainFitModel(m["condition"], m["slope"], m["intercept_db"],
                           m["floor_db"])
        for cond, m in d.items()
    }


def cmd_run(args) -> int:
    if not args.config:
        raise ValueError("run needs --config")
    with open(args.config) as f:
        config = campaign_mod.load_campaign(f, base_dir=os.path.dirname(args.config) or ".")
    if args.out:
        config.out_dir = args.out
    if args.seed is not None:
        config.seeds = [args.seed]
    rows = campaign_mod.run_campaign(config)
    if args.verbose:
        for r in rows:
            print(f"{r['case']} / {r['model']} / seed {r['seed']}: "
                  f"n_ho={r['n_ho']} n_rlf={r['n_rlf']} "
                  f"outage={r['outage_percent']}%")
    print(f"wrote {len(rows)} KPI rows to {config.out_dir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    with open(args.events) as f:
        report = kpis_from_event_log(f)
    print(f"n_ho={report.n_ho}")
    print(f"n_rlf={report.n_rlf}")
    print(f"outage_percent={report.outage_percent:.4f}")
    print(f"ho_per_ue_per_min={report.ho_per_ue_per_min:.4f}")
    print(f"rlf_per_ue_per_min={report.rlf_per_ue_per_min:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_VALIDATION if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # pragma: no cover
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
