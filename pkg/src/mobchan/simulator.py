"""Discrete-time system-level mobility simulator.

Ticks terminal motion, link geometry, fading playback, measurement
filtering and the handover / radio-link-failure machinery, and accounts the
mobility KPIs: successful handovers, declared failures and outage time.

All per-tick quantities are vectorized over the (terminal x cell) link
matrix; per-terminal state machines run in plain Python since terminal
counts in supported scenarios are small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beamforming import (
    DEFAULT_GAIN_FIT,
    ElementPattern,
    GainFitModel,
    NULL_FLOOR_DB,
    default_beam_set,
    direction_unit_vector,
    steering_weights,
)
from .channel_stats import FadingLUT, TupleLibrary, assign_link_channel
from .fading import generate_multipath_envelope, max_doppler_hz
from .handover import A3Tracker, HandoverProcess, MobilityThresholds, RlfMonitor
from .measurement import alpha_from_time_constant, measurement_error_sample
from .propagation import ShadowingProcess, line_of_sight, umi_path_loss_db
from .scenario import Scenario, init_ue_states, step_ue_motion


@dataclass(frozen=True)
class SimConfig:
    """Feature toggles and channel/gain model selection for one run."""

    fading: bool = False              # FF
    measurement_error: bool = False   # ME
    l3: bool = False
    t_alpha_s: float = 0.1
    channel_model: str = "simplified"  # "simplified" | "jakes"
    jakes_l: int = 8
    gain_model: str = "single"         # "single" | "fitting"
    gain_fit: dict = field(default_factory=lambda: dict(DEFAULT_GAIN_FIT))
    library: TupleLibrary | None = None
    lut: FadingLUT | None = None

    def validate(self, scenario: Scenario) -> None:
        if self.channel_model not in ("simplified", "jakes"):
            raise ValueError(f"unknown channel model {self.channel_model!r}")
        if self.gain_model not in ("single", "fitting"):
            raise ValueError(f"unknown gain model {self.gain_model!r}")
        if self.channel_model == "jakes" and self.jakes_l < 1:
            raise ValueError("jakes path diversity must be >= 1")
        if self.l3 and self.t_alpha_s <= 0:
            raise ValueError("L3 filtering needs a positive time constant")
        if self.fading and self.channel_model == "simplified":
            if self.library is None or self.lut is None:
                raise ValueError(
                    "simplified channel model with fading needs a tuple "
                    "library and a fading look-up table"
                )


EVENT_COLUMNS = ["t_s", "ue_id", "event", "detail"]


@dataclass
class KpiReport:
    n_ho: int
    n_rlf: int
    outage_percent: float
    duration_s: float
    n_ues: int
    per_ue_outage_s: tuple
    per_cell_ho: dict
    events: list

    @property
    def ho_per_ue_per_min(self) -> float:
        return self.n_ho / self.n_ues / (self.duration_s / 60.0)

    @property
    def rlf_per_ue_per_min(self) -> float:
        return self.n_rlf / self.n_ues / (self.duration_s / 60.0)


def write_event_log(report: KpiReport, stream) -> None:
    import csv

    stream.write(
        f"# duration_s={report.duration_s!r}, n_ues={report.n_ues}\n"
    )
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(EVENT_COLUMNS)
    for t, ue, event, detail in report.events:
        w.writerow([f"{t:.3f}", ue, event, detail])


def kpis_from_event_log(stream) -> KpiReport:
    """Recompute the KPI counters from a previously written event log."""
    import csv
    import re

    header = stream.readline()
    m = re.match(r"#\s*duration_s=([0-9.eE+-]+),\s*n_ues=(\d+)", header.strip())
    if not m:
        raise ValueError(f"missing event-log header: {header!r}")
    duration, n_ues = float(m.group(1)), int(m.group(2))
    r = csv.reader(stream)
    cols = next(r, None)
    if cols != EVENT_COLUMNS:
        raise ValueError(f"bad event-log columns: {cols!r}")
    n_ho = n_rlf = 0
    outage = {}
    enter = {}
    per_cell_ho = {}
    events = []
    for row in r:
        if not row:
            continue
        t, ue, event, detail = float(row[0]), int(row[1]), row[2], row[3]
        events.append((t, ue, event, detail))
        if event == "HO_SUCCESS":
            n_ho += 1
            per_cell_ho[detail] = per_cell_ho.get(detail, 0) + 1
        elif event == "RLF":
            n_rlf += 1
        elif event == "OUTAGE_ENTER":
            enter[ue] = t
        elif event == "OUTAGE_EXIT":
            outage[ue] = outage.get(ue, 0.0) + t - enter.pop(ue)
    for ue, t in enter.items():
        outage[ue] = outage.get(ue, 0.0) + duration - t
    total = sum(outage.values())
    return KpiReport(
        n_ho=n_ho,
        n_rlf=n_rlf,
        outage_percent=100.0 * total / (n_ues * duration),
        duration_s=duration,
        n_ues=n_ues,
        per_ue_outage_s=tuple(outage.get(u, 0.0) for u in range(n_ues)),
        per_cell_ho=per_cell_ho,
        events=events,
    )


# -- beam gain tables --------------------------------------------------------

_ELEV_STEP = 1.5
_AZ_STEP = 1.5
_ELEV_GRID = np.arange(-90.0, 90.0 + 1e-9, _ELEV_STEP)
_AZ_GRID = np.arange(-180.0, 180.0 + 1e-9, _AZ_STEP)
_table_cache: dict = {}


def beam_gain_table(element_pattern: ElementPattern | None = None) -> np.ndarray:
    """(12, n_elev, n_az) single-ray beam gains over the local angle grid.

    Local azimuth is measured from the sector boresight; panels face
    boresight.  The table is cached since the default beam set is fixed.
    """
    pattern = element_pattern or ElementPattern()
    key = pattern
    if key in _table_cache:
        return _table_cache[key]
    beams = default_beam_set()
    ee, aa = np.meshgrid(_ELEV_GRID, _AZ_GRID, indexing="ij")
    zen = np.radians(90.0 - ee.ravel())
    az = np.radians(aa.ravel() + 90.0)  # panel boresight at local azimuth 0
    dirs = np.stack(
        [np.sin(zen) * np.cos(az), np.sin(zen) * np.sin(az), np.cos(zen)], axis=1
    )
    elem_db = pattern.gain_db(ee.ravel(), aa.ravel())
    table = np.empty((len(beams),) + ee.shape)
    responses = {}
    for b, beam in enumerate(beams):
        geom = beam.geometry
        if geom not in responses:
            responses[geom] = np.exp(2j * np.pi * (dirs @ geom.element_positions().T))
        w = steering_weights(geom, beam.elevation_deg, beam.azimuth_deg)
        af = np.abs(responses[geom] @ np.conj(w)) ** 2 / geom.n_elements
        af_db = 10.0 * np.log10(np.maximum(af, 10 ** (NULL_FLOOR_DB / 10)))
        table[b] = (af_db + elem_db).reshape(ee.shape)
    _table_cache[key] = table
    return table


def _angle_indices(elev_deg: np.ndarray, az_local_deg: np.ndarray):
    ei = np.clip(np.rint((elev_deg + 90.0) / _ELEV_STEP).astype(np.intp),
                 0, len(_ELEV_GRID) - 1)
    ai = np.clip(np.rint((az_local_deg + 180.0) / _AZ_STEP).astype(np.intp),
                 0, len(_AZ_GRID) - 1)
    return ei, ai


# -- simulator ---------------------------------------------------------------

class Simulator:
    def __init__(self, scenario: Scenario, config: SimConfig):
        config.validate(scenario)
        self.scenario = scenario
        self.config = config
        self.thr = scenario.thresholds
        self.radio = scenario.radio
        cells = scenario.cells
        self.n_cells = len(cells)
        self.n_ues = scenario.n_ues
        self.cell_x = np.array([c.site.x for c in cells])
        self.cell_y = np.array([c.site.y for c in cells])
        self.cell_z = np.array([c.site.height_m for c in cells])
        self.cell_az = np.array([c.azimuth_deg for c in cells])
        self.site_of_cell = []
        for si, s in enumerate(scenario.sites):
            self.site_of_cell += [si] * len(s.sector_azimuths_deg)
        self.gain_table = beam_gain_table()
        self.n_beams = self.gain_table.shape[0]

        ss = np.random.SeedSequence(scenario.sim.seed)
        (self.rng_motion, self.rng_me, self.rng_assign,
         self.rng_interf, self.rng_shadow) = (
            np.random.default_rng(s) for s in ss.spawn(5)
        )

        self.tick_s = scenario.sim.tick_s
        self.n_ticks = int(round(scenario.sim.duration_s / self.tick_s))
        self.l1_every = max(1, int(round(self.radio.l1_period_s / self.tick_s)))
        self.l1_window = max(1, int(round(self.radio.l1_window_s / self.tick_s)))
        self.alpha = (
            alpha_from_time_constant(config.t_alpha_s, self.radio.l1_period_s)
            if config.l3 else 1.0
        )

        self.ues = init_ue_states(scenario, self.rng_motion)
        self.ue_speed = np.array([u.speed_mps for u in self.ues])
        self._setup_fading()

        if self.radio.shadowing:
            self.shadowing = ShadowingProcess(
                self.n_ues * self.n_cells, seed=int(self.rng_shadow.integers(2**32))
            )
        else:
            self.shadowing = None

        # measurement state
        self.l1_ring = np.zeros((self.n_ues, self.n_cells, self.l1_window))
        self.l1_fill = 0
        self.l3_db = None  # (U, C), seeded by the first L1 output

        # per-terminal mobility state
        self.serving = np.zeros(self.n_ues, dtype=int)
        self.a3 = [A3Tracker(self.thr.a3_offset_db, self.thr.time_to_trigger_s)
                   for _ in range(self.n_ues)]
        self.rlf = [RlfMonitor(self.thr) for _ in range(self.n_ues)]
        self.ho = [HandoverProcess(self.thr) for _ in range(self.n_ues)]
        self.reestablish_left = np.full(self.n_ues, -1.0)
        self.in_outage = np.zeros(self.n_ues, dtype=bool)
        self.outage_s = np.zeros(self.n_ues)
        self.n_ho = 0
        self.n_rlf = 0
        self.per_cell_ho: dict = {}
        self.events: list = []

    # -- fading setup --------------------------------------------------------

    def _setup_fading(self):
        cfg = self.config
        U, C = self.n_ues, self.n_cells
        n_links = U * C
        if not cfg.fading:
            self.fad_bank = None
            return
        if cfg.channel_model == "simplified":
            lut = cfg.lut
            self.fad_bank = lut.sample_bank()
            self.fad_period = lut.sample_period_s
            n_env = self.fad_bank.shape[1]
            B = cfg.library.n_beams
            cells = np.zeros((2, n_links, B), dtype=np.intp)
            offs = np.zeros((2, n_links, B), dtype=np.intp)
            for u in range(U):
                for c in range(C):
                    link = u * C + c
                    a = assign_link_channel(
                        cfg.library, lut, link, self.rng_assign,
                        self.radio.carrier_hz, max(self.ue_speed[u], 1e-3),
                    )
                    for ci, cond in enumerate(("LOS", "NLOS")):
                        for b, cell in enumerate(a.cells[cond]):
                            cells[ci, link, b] = lut.flat_index(
                                cell.diversity_index, cell.coherence_index
                            )
                            offs[ci, link, b] = cell.playback_offset
            self.fad_cells = cells
            self.fad_offs = offs
        else:
            # one envelope per distinct speed, shared with random offsets
            speeds = sorted(set(float(s) for s in self.ue_speed))
            bank = []
            speed_env = {}
            for s in speeds:
                f_max = max(max_doppler_hz(self.radio.carrier_hz, s), 0.5)
                period = min(1e-3, 1.0 / (16.0 * f_max))
                env = generate_multipath_envelope(
                    path_diversity=cfg.jakes_l,
                    sinusoids_per_path=64,
                    f_max_hz=f_max,
                    duration_s=2.0,
                    sample_period_s=period,
                    seed=int(self.rng_assign.integers(2**32)),
                )
                speed_env[s] = (len(bank), period)
                bank.append(env.samples)
            n_env = max(len(e) for e in bank)
            self.fad_bank = np.zeros((len(bank), n_env))
            self.fad_period_per_env = np.zeros(len(bank))
            self.fad_len = np.zeros(len(bank), dtype=np.intp)
            for i, e in enumerate(bank):
                self.fad_bank[i, : len(e)] = e
                self.fad_len[i] = len(e)
            link_env = np.zeros(n_links, dtype=np.intp)
            link_off = np.zeros(n_links, dtype=np.intp)
            for u in range(U):
                idx, period = speed_env[float(self.ue_speed[u])]
                self.fad_period_per_env[idx] = period
                for c in range(C):
                    link = u * C + c
                    link_env[link] = idx
                    link_off[link] = int(
                        self.rng_assign.integers(self.fad_len[idx])
                    )
            self.jakes_env = link_env
            self.jakes_off = link_off

    def _fading_lin(self, t_s: float, rank_idx: np.ndarray, los: np.ndarray):
        """(U, C) unit-mean multipliers for the given per-link beam ranks."""
        if self.fad_bank is None:
            return None
        U, C = self.n_ues, self.n_cells
        if self.config.channel_model == "jakes":
            env = self.jakes_env
            step = np.rint(t_s / self.fad_period_per_env[env]).astype(np.intp)
            idx = (self.jakes_off + step) % self.fad_len[env]
            return self.fad_bank[env, idx].reshape(U, C)
        link = np.arange(U * C)
        cond = np.where(los.ravel(), 0, 1)
        rk = rank_idx.ravel()
        cell = self.fad_cells[cond, link, rk]
        off = self.fad_offs[cond, link, rk]
        step = int(round(t_s / self.fad_period))
        idx = (off + step) % self.fad_bank.shape[1]
        return self.fad_bank[cell, idx].reshape(U, C)

    # -- per-tick physics ----------------------------------------------------

    def _geometry(self):
        x = np.array([u.x for u in self.ues])
        y = np.array([u.y for u in self.ues])
        dx = x[:, None] - self.cell_x[None, :]
        dy = y[:, None] - self.cell_y[None, :]
        d2d = np.hypot(dx, dy)
        elev = np.degrees(np.arctan2(1.5 - self.cell_z[None, :], np.maximum(d2d, 1.0)))
        g_az = np.degrees(np.arctan2(dy, dx))
        az_local = (g_az - self.cell_az[None, :] + 180.0) % 360.0 - 180.0
        los_site = np.stack(
            [
                line_of_sight((s.x, s.y), x, y, self.scenario.buildings)
                for s in self.scenario.sites
            ]
        )
        los = los_site[self.site_of_cell, :].T  # (U, C)
        return x, y, d2d, elev, az_local, los

    def _effective_gains(self, gains_db: np.ndarray, los: np.ndarray) -> np.ndarray:
        if self.config.gain_model == "single":
            return gains_db
        fit_l = self.config.gain_fit["LOS"]
        fit_n = self.config.gain_fit["NLOS"]
        return np.where(los[:, :, None], fit_l(gains_db), fit_n(gains_db))

    def step_physics(self, t_s: float, moved_m: np.ndarray):
        """One tick of geometry, gains, fading, RSRP and per-cell powers."""
        U, C = self.n_ues, self.n_cells
        x, y, d2d, elev, az_local, los = self._geometry()
        pl = umi_path_loss_db(d2d, self.radio.carrier_hz, los)
        ei, ai = _angle_indices(elev, az_local)
        gains = self.gain_table[:, ei, ai]          # (12, U, C)
        gains = np.moveaxis(gains, 0, 2)            # (U, C, 12)
        geff = self._effective_gains(gains, los)
        order = np.argsort(-gains, axis=2, kind="stable")
        rank_of = np.empty_like(order)
        lin = np.arange(self.n_beams)
        np.put_along_axis(rank_of, order, np.broadcast_to(lin, order.shape), axis=2)
        best = order[:, :, 0]
        g_best = np.take_along_axis(geff, best[:, :, None], axis=2)[:, :, 0]

        shadow = 0.0
        if self.shadowing is not None:
            shadow = self.shadowing.update(
                np.repeat(moved_m, C), los.ravel()
            ).reshape(U, C)

        fad_meas = self._fading_lin(t_s, np.zeros((U, C), dtype=np.intp), los)
        rsrp = self.radio.tx_power_dbm_per_prb + g_best - pl + shadow
        if fad_meas is not None:
            rsrp = rsrp + 10.0 * np.log10(np.maximum(fad_meas, 1e-12))

        # one active beam per cell, drawn among the best beams of its
        # attached terminals (uniform over all beams for empty cells)
        active = np.empty(C, dtype=np.intp)
        for c in range(C):
            attached = np.nonzero((self.serving == c) & (self.reestablish_left < 0))[0]
            if len(attached) == 0:
                active[c] = self.rng_interf.integers(self.n_beams)
            else:
                pick = attached[self.rng_interf.integers(len(attached))]
                active[c] = best[pick, c]
        g_int = np.take_along_axis(
            geff, np.broadcast_to(active[None, :, None], (U, C, 1)), axis=2
        )[:, :, 0]
        r_int = np.take_along_axis(
            rank_of, np.broadcast_to(active[None, :, None], (U, C, 1)), axis=2
        )[:, :, 0]
        p_int_db = self.radio.tx_power_dbm_per_prb + g_int - pl + shadow
        fad_int = self._fading_lin(t_s, r_int, los)
        p_int_lin = 10.0 ** (p_int_db / 10.0)
        if fad_int is not None:
            p_int_lin = p_int_lin * fad_int
        return rsrp, p_int_lin

    def sinr_db(self, rsrp_db: np.ndarray, p_int_lin: np.ndarray,
                ue: int, cell: int) -> float:
        """Link quality of terminal `ue` if served by `cell`."""
        s_lin = 10.0 ** (rsrp_db[ue, cell] / 10.0)
        noise = 10.0 ** (self.radio.noise_dbm_per_prb / 10.0)
        interf = p_int_lin[ue].sum() - p_int_lin[ue, cell]
        return 10.0 * math.log10(s_lin / (noise + interf))

    # -- main loop -----------------------------------------------------------

    def _log(self, t_s: float, ue: int, event: str, detail: str = ""):
        self.events.append((t_s, ue, event, detail))

    def _set_outage(self, t_s: float, ue: int, flag: bool):
        if flag and not self.in_outage[ue]:
            self.in_outage[ue] = True
            self._log(t_s, ue, "OUTAGE_ENTER")
        elif not flag and self.in_outage[ue]:
            self.in_outage[ue] = False
            self._log(t_s, ue, "OUTAGE_EXIT")

    def run(self) -> KpiReport:
        U, C = self.n_ues, self.n_cells
        me_enabled = self.config.measurement_error
        sigma = self.radio.sigma_me_db

        # initial attach: strongest received power at t=0
        rsrp, p_int = self.step_physics(0.0, np.zeros(U))
        self.serving = np.argmax(rsrp, axis=1)

        for n in range(self.n_ticks):
            t = n * self.tick_s
            moved = self.ue_speed * self.tick_s
            for u in self.ues:
                step_ue_motion(u, self.tick_s, self.rng_motion)
            rsrp, p_int = self.step_physics(t, moved)

            l1_in = rsrp
            if me_enabled and sigma > 0:
                l1_in = rsrp + measurement_error_sample(self.rng_me, sigma, (U, C))
            self.l1_ring[:, :, n % self.l1_window] = 10.0 ** (l1_in / 10.0)
            self.l1_fill = min(self.l1_fill + 1, self.l1_window)
            if n % self.l1_every == 0:
                window = self.l1_ring[:, :, : self.l1_fill]
                q_db = 10.0 * np.log10(window.mean(axis=2))
                if self.l3_db is None or not self.config.l3:
                    self.l3_db = q_db
                else:
                    self.l3_db = self.alpha * q_db + (1 - self.alpha) * self.l3_db

            for ue in range(U):
                self._step_ue(t, ue, rsrp, p_int)

            self.outage_s += self.in_outage * self.tick_s

        total = float(self.outage_s.sum())
        duration = self.n_ticks * self.tick_s
        return KpiReport(
            n_ho=self.n_ho,
            n_rlf=self.n_rlf,
            outage_percent=100.0 * total / (U * duration),
            duration_s=duration,
            n_ues=U,
            per_ue_outage_s=tuple(float(v) for v in self.outage_s),
            per_cell_ho=dict(self.per_cell_ho),
            events=self.events,
        )

    def _step_ue(self, t: float, ue: int, rsrp: np.ndarray, p_int: np.ndarray):
        thr = self.thr
        # re-establishment after a declared failure
        if self.reestablish_left[ue] >= 0:
            self.reestablish_left[ue] -= self.tick_s
            if self.reestablish_left[ue] < 0:
                target = int(np.argmax(self.l3_db[ue]))
                self.serving[ue] = target
                self.a3[ue].reset()
                self.rlf[ue].reset()
                self._log(t, ue, "REESTABLISH", f"cell={target}")
            else:
                self._set_outage(t, ue, True)
                return

        serving = int(self.serving[ue])
        sinr_serv = self.sinr_db(rsrp, p_int, ue, serving)

        ho = self.ho[ue]
        if ho.in_random_access:
            target = int(ho.pending.target)
            sinr_tgt = self.sinr_db(rsrp, p_int, ue, target)
            result = ho.step(sinr_tgt, self.tick_s)
            if result == "complete":
                self.serving[ue] = target
                self.n_ho += 1
                key = f"cell={target}"
                self.per_cell_ho[key] = self.per_cell_ho.get(key, 0) + 1
                self.a3[ue].reset()
                self.rlf[ue].reset()
                self._log(t, ue, "HO_SUCCESS", key)
                self._set_outage(t, ue, False)
                return
            if result == "failed":
                self._log(t, ue, "HO_RA_FAIL", f"cell={target}")
            else:
                self._set_outage(t, ue, True)
                return

        rlf_event = self.rlf[ue].update(sinr_serv, self.tick_s)
        if rlf_event == "t310_start":
            self._log(t, ue, "T310_START")
        elif rlf_event == "t310_stop":
            self._log(t, ue, "T310_STOP")
        elif rlf_event == "rlf":
            self.n_rlf += 1
            self._log(t, ue, "RLF", f"cell={serving}")
            self.reestablish_left[ue] = thr.reestablish_delay_s
            self.ho[ue].pending = None
            self._set_outage(t, ue, True)
            return

        if self.l3_db is not None:
            neighbors = {
                c: self.l3_db[ue, c] for c in range(self.n_cells) if c != serving
            }
            report = self.a3[ue].update(
                self.l3_db[ue, serving], neighbors, self.tick_s
            )
            if report is not None and not self.ho[ue].in_random_access:
                self._log(t, ue, "A3_REPORT", f"cell={report}")
                outcome = self.ho[ue].start(int(report), sinr_serv)
                if outcome == "command_failed":
                    self._log(t, ue, "HO_CMD_FAIL", f"cell={report}")

        self._set_outage(
            t, ue, sinr_serv < thr.qout_db or self.ho[ue].in_random_access
        )


def run_simulation(scenario: Scenario, config: SimConfig) -> KpiReport:
    """Run one seeded simulation and return its KPI report and event log."""
    return Simulator(scenario, config).run()
