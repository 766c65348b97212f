"""Per-beam channel statistics: tuple library and fast-fading look-up table.

A tuple library holds, per LOS/NLOS condition, M tuples of per-beam
(coherence time, path diversity) rows sorted by descending mean beam power,
all referenced to one carrier frequency and speed.  Links draw one tuple per
condition, scale its coherence times to the simulated carrier/speed, and are
then mapped onto a pre-generated grid of fading envelopes by the
nearest-smaller rule.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .fading import FadingProcess, GenParams, coherence_time_jakes, generate_multipath_envelope

CONDITIONS = ("LOS", "NLOS")


@dataclass(frozen=True)
class TupleRow:
    coherence_time_s: float
    path_diversity: int
    mean_beam_power_db: float


@dataclass(frozen=True)
class ChannelTuple:
    condition: str
    ref_carrier_hz: float
    ref_speed_mps: float
    rows: tuple[TupleRow, ...]

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be LOS or NLOS, got {self.condition!r}")
        if self.ref_carrier_hz <= 0 or self.ref_speed_mps <= 0:
            raise ValueError("reference carrier and speed must be positive")
        if len(self.rows) < 1:
            raise ValueError("tuple needs at least one beam row")
        for r in self.rows:
            if r.coherence_time_s <= 0:
                raise ValueError("coherence times must be positive")
            if r.path_diversity < 1:
                raise ValueError("path diversities must be >= 1")
        powers = [r.mean_beam_power_db for r in self.rows]
        if any(a < b for a, b in zip(powers, powers[1:])):
            raise ValueError("rows must be sorted by mean beam power descending")

    @property
    def n_beams(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class TupleLibrary:
    los_tuples: tuple[ChannelTuple, ...]
    nlos_tuples: tuple[ChannelTuple, ...]
    provenance: str = "synthetic"  # "ingested" | "synthetic"

    def __post_init__(self):
        allt = self.los_tuples + self.nlos_tuples
        if not self.los_tuples or not self.nlos_tuples:
            raise ValueError("library needs at least one tuple per condition")
        ref = (allt[0].ref_carrier_hz, allt[0].ref_speed_mps, allt[0].n_beams)
        for t in allt:
            if (t.ref_carrier_hz, t.ref_speed_mps, t.n_beams) != ref:
                raise ValueError("all tuples must share reference carrier, speed and B")

    @property
    def ref_carrier_hz(self) -> float:
        return self.los_tuples[0].ref_carrier_hz

    @property
    def ref_speed_mps(self) -> float:
        return self.los_tuples[0].ref_speed_mps

    @property
    def n_beams(self) -> int:
        return self.los_tuples[0].n_beams

    def tuples(self, condition: str) -> tuple[ChannelTuple, ...]:
        return self.los_tuples if condition == "LOS" else self.nlos_tuples


def scale_coherence_time(
    tc_s: float,
    ref_carrier_hz: float,
    ref_speed_mps: float,
    new_carrier_hz: float,
    new_speed_mps: float,
) -> float:
    """Rescale a coherence time to a new carrier/speed, Tc * (f v)/(f' v')."""
    for v in (tc_s, ref_carrier_hz, ref_speed_mps, new_carrier_hz, new_speed_mps):
        if v <= 0:
            raise ValueError("all scaling arguments must be positive")
    return tc_s * (ref_carrier_hz * ref_speed_mps) / (new_carrier_hz * new_speed_mps)


# -- tuple file format -------------------------------------------------------

_HEADER_RE = re.compile(
    r"#\s*ref_carrier_hz=([0-9.eE+-]+),\s*ref_speed_mps=([0-9.eE+-]+),\s*B=(\d+)"
)
_COLUMNS = ["condition", "tuple_id", "beam_rank", "mean_power_db",
            "coherence_time_s", "path_diversity"]


def export_tuples(library: TupleLibrary, stream) -> None:
    stream.write(
        f"# ref_carrier_hz={library.ref_carrier_hz!r}, "
        f"ref_speed_mps={library.ref_speed_mps!r}, B={library.n_beams}\n"
    )
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(_COLUMNS)
    for cond in CONDITIONS:
        for m, t in enumerate(library.tuples(cond)):
            for b, row in enumerate(t.rows, start=1):
                w.writerow([cond, m, b, repr(row.mean_beam_power_db),
                            repr(row.coherence_time_s), row.path_diversity])


def ingest_tuples(stream) -> TupleLibrary:
    """Parse a tuple CSV; rows are re-sorted by mean power if needed."""
    first = stream.readline()
    m = _HEADER_RE.match(first.strip())
    if not m:
        raise ValueError(f"missing or malformed tuple header comment: {first!r}")
    ref_carrier = float(m.group(1))
    ref_speed = float(m.group(2))
    n_beams = int(m.group(3))
    r = csv.reader(stream)
    cols = next(r, None)
    if cols != _COLUMNS:
        raise ValueError(f"bad tuple column header: {cols!r}")
    rows: dict[tuple[str, int], list[tuple[int, TupleRow]]] = {}
    for line in r:
        if not line:
            continue
        if len(line) != 6:
            raise ValueError(f"malformed tuple row: {line!r}")
        cond, tid, rank = line[0], int(line[1]), int(line[2])
        if cond not in CONDITIONS:
            raise ValueError(f"bad condition {cond!r}")
        row = TupleRow(
            coherence_time_s=float(line[4]),
            path_diversity=int(line[5]),
            mean_beam_power_db=float(line[3]),
        )
        if row.coherence_time_s <= 0:
            raise ValueError("non-positive coherence time in tuple file")
        if row.path_diversity < 1:
            raise ValueError("non-positive path diversity in tuple file")
        rows.setdefault((cond, tid), []).append((rank, row))
    per_cond: dict[str, list[ChannelTuple]] = {c: [] for c in CONDITIONS}
    for (cond, tid) in sorted(rows, key=lambda k: (k[0], k[1])):
        entries = [row for _, row in sorted(rows[(cond, tid)])]
        if len(entries) != n_beams:
            raise ValueError(
                f"tuple {cond}/{tid} has {len(entries)} rows, expected B={n_beams}"
            )
        entries.sort(key=lambda rr: -rr.mean_beam_power_db)
        per_cond[cond].append(
            ChannelTuple(cond, ref_carrier, ref_speed, tuple(entries))
        )
    return TupleLibrary(
        los_tuples=tuple(per_cond["LOS"]),
        nlos_tuples=tuple(per_cond["NLOS"]),
        provenance="ingested",
    )


def tuples_csv_string(library: TupleLibrary) -> str:
    buf = io.StringIO()
    export_tuples(library, buf)
    return buf.getvalue()


# -- synthetic tuple generator ----------------------------------------------

@dataclass(frozen=True)
class SyntheticTupleParams:
    """Distribution knobs for the synthetic tuple generator.

    Coherence times are log-normal with a median of `tc_median_factor` times
    the reference 50% coherence time, truncated just above 1x that value so
    beamformed links fade slower than the uniform-arrival baseline.  Path
    diversity is a clipped discrete normal whose mode rises linearly from
    the strongest to the weakest beam rank.
    """

    tc_median_factor: float = 4.0
    tc_sigma_log: float = 0.5
    tc_floor_factor: float = 1.0
    l_mode_strongest: int = 6
    l_mode_weakest: int = 20
    l_sigma: float = 3.0
    l_max: int = 32
    power_step_db: float = 2.0

    def __post_init__(self):
        if self.tc_median_factor <= 0 or self.tc_sigma_log < 0:
            raise ValueError("invalid coherence-time distribution parameters")
        if self.l_mode_strongest < 1 or self.l_mode_weakest < 1 or self.l_sigma < 0:
            raise ValueError("invalid path-diversity distribution parameters")


def synthesize_tuple_library(
    n_tuples: int,
    n_beams: int,
    seed: int,
    params: SyntheticTupleParams | None = None,
    ref_carrier_hz: float = 28e9,
    ref_speed_mps: float = 1000.0 / 3600.0,
) -> TupleLibrary:
    """Random tuple library standing in for externally produced statistics."""
    if n_tuples < 1 or n_beams < 1:
        raise ValueError("n_tuples and n_beams must be >= 1")
    p = params or SyntheticTupleParams()
    rng = np.random.default_rng(seed)
    from .fading import max_doppler_hz

    tc_ref = coherence_time_jakes(max_doppler_hz(ref_carrier_hz, ref_speed_mps))
    tc_floor = p.tc_floor_factor * tc_ref * (1.0 + 1e-9)

    def draw_condition(cond: str) -> tuple[ChannelTuple, ...]:
        out = []
        for _ in range(n_tuples):
            rows = []
            power = 0.0
            for b in range(n_beams):
                frac = b / max(1, n_beams - 1)
                mode = p.l_mode_strongest + frac * (p.l_mode_weakest - p.l_mode_strongest)
                l = int(round(rng.normal(mode, p.l_sigma)))
                l = min(max(l, 1), p.l_max)
                tc = p.tc_median_factor * tc_ref * math.exp(
                    rng.normal(0.0, p.tc_sigma_log)
                )
                tc = max(tc, tc_floor)
                rows.append(TupleRow(tc, l, power))
                power -= rng.exponential(p.power_step_db)
            out.append(ChannelTuple(cond, ref_carrier_hz, ref_speed_mps, tuple(rows)))
        return tuple(out)

    return TupleLibrary(
        los_tuples=draw_condition("LOS"),
        nlos_tuples=draw_condition("NLOS"),
        provenance="synthetic",
    )


# -- fading look-up table ----------------------------------------------------

@dataclass(frozen=True)
class FadingLUT:
    """Pre-generated envelopes on a (path diversity x coherence time) grid."""

    diversity_grid: tuple[int, ...]
    coherence_grid: tuple[float, ...]
    envelopes: tuple[tuple[FadingProcess, ...], ...]  # [i][j]
    sample_period_s: float
    duration_s: float
    seed: int

    @property
    def n_samples(self) -> int:
        return len(self.envelopes[0][0].samples)

    def envelope(self, i: int, j: int) -> FadingProcess:
        return self.envelopes[i][j]

    def sample_bank(self) -> np.ndarray:
        """(I*J, N) matrix of all envelopes for vectorized playback."""
        return np.stack(
            [env.samples for row in self.envelopes for env in row]
        )

    def flat_index(self, i: int, j: int) -> int:
        return i * len(self.coherence_grid) + j


def f_max_for_coherence_time(tc_s: float) -> float:
    """Doppler spread whose 50% coherence time equals tc_s."""
    if tc_s <= 0:
        raise ValueError("coherence time must be positive")
    return 9.0 / (16.0 * math.pi * tc_s)


def default_coherence_grid(fastest_f_max_hz: float, n_points: int = 10,
                           lo_factor: float = 0.5, hi_factor: float = 16.0):
    """Geometric ladder spanning [lo, hi] x the 50% coherence time at f_max."""
    tc = coherence_time_jakes(fastest_f_max_hz)
    return tuple(np.geomspace(lo_factor * tc, hi_factor * tc, n_points))


DEFAULT_DIVERSITY_GRID = (1, 2, 4, 8, 16, 32)


def build_fading_lut(
    diversity_grid,
    coherence_grid,
    duration_s: float,
    sample_period_s: float,
    seed: int,
    sinusoids_per_path: int = 64,
) -> FadingLUT:
    """Generate one envelope per grid cell with f_max implied by its Tc."""
    div = tuple(int(l) for l in diversity_grid)
    coh = tuple(float(t) for t in coherence_grid)
    if not div or not coh:
        raise ValueError("grids must be non-empty")
    if any(a >= b for a, b in zip(div, div[1:])) or any(
        a >= b for a, b in zip(coh, coh[1:])
    ):
        raise ValueError("grids must be strictly ascending")
    f_max_largest = f_max_for_coherence_time(coh[0])
    if sample_period_s >= 1.0 / (2.0 * f_max_largest):
        raise ValueError("sample period violates Nyquist for the smallest grid Tc")
    rows = []
    cell_seed = seed
    for l in div:
        row = []
        for tc in coh:
            cell_seed += 1
            row.append(
                generate_multipath_envelope(
                    path_diversity=l,
                    sinusoids_per_path=sinusoids_per_path,
                    f_max_hz=f_max_for_coherence_time(tc),
                    duration_s=duration_s,
                    sample_period_s=sample_period_s,
                    seed=cell_seed,
                )
            )
        rows.append(tuple(row))
    return FadingLUT(div, coh, tuple(rows), sample_period_s, duration_s, seed)


def save_fading_lut(lut: FadingLUT, directory: str) -> None:
    """Persist as a manifest plus one envelope CSV per grid cell."""
    from .fading import write_envelope_csv

    os.makedirs(directory, exist_ok=True)
    manifest = {
        "diversity_grid": list(lut.diversity_grid),
        "coherence_grid": [repr(t) for t in lut.coherence_grid],
        "sample_period_s": repr(lut.sample_period_s),
        "duration_s": repr(lut.duration_s),
        "seed": lut.seed,
        "envelopes": {},
    }
    for i, l in enumerate(lut.diversity_grid):
        for j in range(len(lut.coherence_grid)):
            name = f"envelope_L{l}_j{j}.csv"
            manifest["envelopes"][f"{i},{j}"] = name
            with open(os.path.join(directory, name), "w") as f:
                write_envelope_csv(lut.envelope(i, j), f)
    with open(os.path.join(directory, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)


def load_fading_lut(directory: str) -> FadingLUT:
    from .fading import read_envelope_csv

    with open(os.path.join(directory, "manifest.json")) as f:
        manifest = json.load(f)
    div = tuple(int(l) for l in manifest["diversity_grid"])
    coh = tuple(float(t) for t in manifest["coherence_grid"])
    rows = []
    for i, l in enumerate(div):
        row = []
        for j, tc in enumerate(coh):
            path = os.path.join(directory, manifest["envelopes"][f"{i},{j}"])
            with open(path) as f:
                proc = read_envelope_csv(
                    f, GenParams(0, l, f_max_for_coherence_time(tc), manifest["seed"])
                )
            row.append(proc)
        rows.append(tuple(row))
    return FadingLUT(
        div, coh, tuple(rows),
        float(manifest["sample_period_s"]), float(manifest["duration_s"]),
        int(manifest["seed"]),
    )


# -- link assignment ---------------------------------------------------------

@dataclass(frozen=True)
class BeamCell:
    diversity_index: int
    coherence_index: int
    playback_offset: int
    fallback: bool


@dataclass(frozen=True)
class LinkChannelAssignment:
    link_id: int
    los_tuple_index: int
    nlos_tuple_index: int
    cells: dict  # condition -> tuple of BeamCell, one per beam rank


def _nearest_smaller(grid, value) -> tuple[int, bool]:
    """Index of the largest grid entry strictly below value; fallback to 0."""
    idx = None
    for i, g in enumerate(grid):
        if g < value:
            idx = i
    if idx is None:
        return 0, True
    return idx, False


def assign_link_channel(
    library: TupleLibrary,
    lut: FadingLUT,
    link_id: int,
    rng: np.random.Generator,
    sim_carrier_hz: float,
    ue_speed_mps: float,
) -> LinkChannelAssignment:
    """Draw tuples, scale their coherence times, and pick LUT cells per beam.

    For each beam rank and condition the selected cell has the largest grid
    coherence time strictly below the scaled tuple value and the largest
    grid diversity strictly below the tuple diversity; when no strictly
    smaller grid point exists the smallest is used and flagged.  A random
    playback offset decorrelates links that share a cell.
    """
    los_idx = int(rng.integers(len(library.los_tuples)))
    nlos_idx = int(rng.integers(len(library.nlos_tuples)))
    cells = {}
    for cond, t_idx in (("LOS", los_idx), ("NLOS", nlos_idx)):
        t = library.tuples(cond)[t_idx]
        beam_cells = []
        for row in t.rows:
            tc_scaled = scale_coherence_time(
                row.coherence_time_s,
                t.ref_carrier_hz,
                t.ref_speed_mps,
                sim_carrier_hz,
                ue_speed_mps,
            )
            j, fb_t = _nearest_smaller(lut.coherence_grid, tc_scaled)
            i, fb_l = _nearest_smaller(lut.diversity_grid, row.path_diversity)
            offset = int(rng.integers(lut.n_samples))
            beam_cells.append(BeamCell(i, j, offset, fb_t or fb_l))
        cells[cond] = tuple(beam_cells)
    return LinkChannelAssignment(link_id, los_idx, nlos_idx, cells)


def sample_fading(
    assignment: LinkChannelAssignment,
    lut: FadingLUT,
    beam_rank: int,
    condition: str,
    t_s: float,
) -> float:
    """Unit-mean linear power multiplier for a link at time t_s.

    `beam_rank` is 1-based, rank 1 being the strongest beam of the tuple.
    """
    try:
        cell = assignment.cells[condition][beam_rank - 1]
    except (KeyError, IndexError):
        raise ValueError(f"no assignment for rank {beam_rank} / {condition}")
    env = lut.envelope(cell.diversity_index, cell.coherence_index)
    n = len(env.samples)
    idx = (cell.playback_offset + int(round(t_s / lut.sample_period_s))) % n
    return float(env.samples[idx])
