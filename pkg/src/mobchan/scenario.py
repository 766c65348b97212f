"""Scenario description: sites, regions, terminal groups and radio settings.

A scenario is a rectangular urban grid of building blocks and streets with
an optional open square and pedestrian area, a set of three-sector rooftop
sites, and groups of moving terminals.  Scenarios load from YAML; a bundled
desk-scale grid keeps full runs fast enough for routine use.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .handover import MobilityThresholds
from .propagation import Rect


@dataclass(frozen=True)
class Site:
    x: float
    y: float
    height_m: float = 10.0
    sector_azimuths_deg: tuple[float, ...] = (0.0, 120.0, 240.0)


@dataclass(frozen=True)
class Cell:
    index: int
    site: Site
    azimuth_deg: float  # sector boresight in the global frame


@dataclass(frozen=True)
class UeGroup:
    count: int
    speed_mps: float
    region: str   # "streets" | "square" | "pedestrian"
    pattern: str  # "street" | "waypoint"


@dataclass(frozen=True)
class SimSettings:
    duration_s: float = 60.0
    tick_s: float = 0.01
    seed: int = 1


@dataclass(frozen=True)
class RadioSettings:
    carrier_hz: float = 28e9
    tx_power_dbm_per_prb: float = 12.0
    noise_dbm_per_prb: float = -97.0
    l1_period_s: float = 0.04
    l1_window_s: float = 0.2
    sigma_me_db: float = 2.0
    shadowing: bool = False


@dataclass(frozen=True)
class Scenario:
    name: str
    sites: tuple[Site, ...]
    buildings: tuple[Rect, ...]
    streets: tuple[Rect, ...]
    square: Rect | None
    pedestrian: Rect | None
    ue_groups: tuple[UeGroup, ...]
    sim: SimSettings = SimSettings()
    radio: RadioSettings = RadioSettings()
    thresholds: MobilityThresholds = MobilityThresholds()

    def __post_init__(self):
        if not self.sites:
            raise ValueError("scenario needs at least one site")
        if not self.ue_groups:
            raise ValueError("scenario needs at least one terminal group")
        if self.sim.tick_s <= 0 or self.sim.duration_s <= 0:
            raise ValueError("tick and duration must be positive")

    @property
    def cells(self) -> tuple[Cell, ...]:
        out = []
        for s in self.sites:
            for az in s.sector_azimuths_deg:
                out.append(Cell(len(out), s, az))
        return tuple(out)

    @property
    def n_ues(self) -> int:
        return sum(g.count for g in self.ue_groups)

    def region_rects(self, name: str) -> tuple[Rect, ...]:
        if name == "streets":
            return self.streets
        if name == "square":
            return (self.square,) if self.square else ()
        if name == "pedestrian":
            return (self.pedestrian,) if self.pedestrian else ()
        raise ValueError(f"unknown region {name!r}")

    @property
    def fastest_speed_mps(self) -> float:
        return max(g.speed_mps for g in self.ue_groups)


KMH = 1000.0 / 3600.0


def desk_scenario(duration_s: float = 60.0, seed: int = 1) -> Scenario:
    """Reduced urban grid: two crossing street canyons, 2 sites, 12 UEs.

    Four building blocks enclose a 14 m street cross; a 25 m plaza pocket
    opens off the NE corner of the intersection and a sidewalk strip runs
    along the east street.  One site sits in each canyon so serving cells
    change at the intersection and corners produce hard LOS transitions.
    """
    streets = (
        Rect(0.0, 100.0, 214.0, 114.0),  # horizontal canyon
        Rect(100.0, 0.0, 114.0, 214.0),  # vertical canyon
    )
    buildings = (
        Rect(0.0, 0.0, 100.0, 100.0),        # SW block
        Rect(114.0, 0.0, 214.0, 100.0),      # SE block
        Rect(0.0, 114.0, 100.0, 214.0),      # NW block
        Rect(139.0, 114.0, 214.0, 214.0),    # NE block, east of the plaza
        Rect(114.0, 139.0, 139.0, 214.0),    # NE block, north of the plaza
    )
    square = Rect(114.0, 114.0, 139.0, 139.0)      # plaza pocket
    pedestrian = Rect(114.0, 100.0, 214.0, 105.0)  # east-street sidewalk
    sites = (
        Site(x=50.0, y=107.0, height_m=10.0),    # horizontal canyon
        Site(x=107.0, y=135.0, height_m=10.0),   # vertical canyon
    )
    groups = (
        UeGroup(count=8, speed_mps=30 * KMH, region="streets", pattern="street"),
        UeGroup(count=2, speed_mps=3 * KMH, region="square", pattern="waypoint"),
        UeGroup(count=2, speed_mps=3 * KMH, region="pedestrian", pattern="waypoint"),
    )
    return Scenario(
        name="desk",
        sites=sites,
        buildings=buildings,
        streets=streets,
        square=square,
        pedestrian=pedestrian,
        ue_groups=groups,
        sim=SimSettings(duration_s=duration_s, tick_s=0.01, seed=seed),
        radio=RadioSettings(l1_window_s=0.01),
    )


def _rect_from(d) -> Rect:
    return Rect(float(d["x0"]), float(d["y0"]), float(d["x1"]), float(d["y1"]))


def load_scenario(stream) -> Scenario:
    d = yaml.safe_load(stream)
    sites = tuple(
        Site(
            float(s["x"]), float(s["y"]),
            float(s.get("height_m", 10.0)),
            tuple(float(a) for a in s.get("sector_azimuths_deg", (0.0, 120.0, 240.0))),
        )
        for s in d["sites"]
    )
    groups = tuple(
        UeGroup(
            int(g["count"]),
            float(g["speed_kmh"]) * KMH if "speed_kmh" in g else float(g["speed_mps"]),
            g["region"],
            g.get("pattern", "waypoint"),
        )
        for g in d["ue_groups"]
    )
    def _coerced(cls, items):
        # YAML may hand back "3.5e9" as a string; coerce to the field types
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        out = {}
        for k, v in items.items():
            t = types.get(k, "")
            if t == "int":
                v = int(v)
            elif t == "float":
                v = float(v)
            elif t == "bool":
                v = bool(v)
            out[k] = v
        return cls(**out)

    sim = _coerced(SimSettings, d.get("sim", {}))
    radio = _coerced(RadioSettings, d.get("radio", {}))
    thr = _coerced(MobilityThresholds, d.get("thresholds", {}))
    return Scenario(
        name=d.get("name", "scenario"),
        sites=sites,
        buildings=tuple(_rect_from(b) for b in d.get("buildings", [])),
        streets=tuple(_rect_from(s) for s in d.get("streets", [])),
        square=_rect_from(d["square"]) if d.get("square") else None,
        pedestrian=_rect_from(d["pedestrian"]) if d.get("pedestrian") else None,
        ue_groups=groups,
        sim=sim,
        radio=radio,
        thresholds=thr,
    )


# -- terminal motion ---------------------------------------------------------

_AXES = ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))


@dataclass
class UeState:
    x: float
    y: float
    speed_mps: float
    pattern: str
    region: tuple[Rect, ...]
    heading: tuple[float, float] = (1.0, 0.0)
    waypoint: tuple[float, float] | None = None


def _inside_any(rects, x, y) -> bool:
    return any(r.contains(x, y) for r in rects)


def init_ue_states(scenario: Scenario, rng: np.random.Generator) -> list[UeState]:
    states = []
    for g in scenario.ue_groups:
        rects = scenario.region_rects(g.region)
        if not rects:
            raise ValueError(f"scenario has no region {g.region!r}")
        for _ in range(g.count):
            r = rects[int(rng.integers(len(rects)))]
            x = float(rng.uniform(r.x0, r.x1))
            y = float(rng.uniform(r.y0, r.y1))
            if g.pattern == "street":
                # travel along the long axis of the chosen street
                horiz = (r.x1 - r.x0) >= (r.y1 - r.y0)
                sign = 1.0 if rng.random() < 0.5 else -1.0
                heading = (sign, 0.0) if horiz else (0.0, sign)
            else:
                heading = (1.0, 0.0)
            states.append(UeState(x, y, g.speed_mps, g.pattern, rects, heading))
    return states


def step_ue_motion(ue: UeState, tick_s: float, rng: np.random.Generator) -> None:
    """Advance one tick: rectilinear street motion or random-waypoint walk."""
    step = ue.speed_mps * tick_s
    if step == 0.0:
        return
    if ue.pattern == "street":
        nx, ny = ue.x + ue.heading[0] * step, ue.y + ue.heading[1] * step
        if _inside_any(ue.region, nx, ny):
            # seeded turn at intersections (point inside more than one street)
            n_here = sum(r.contains(ue.x, ue.y) for r in ue.region)
            if n_here > 1 and rng.random() < 0.01:
                choices = [
                    h for h in _AXES
                    if _inside_any(ue.region, ue.x + h[0] * step, ue.y + h[1] * step)
                    and h != (-ue.heading[0], -ue.heading[1])
                ]
                if choices:
                    ue.heading = choices[int(rng.integers(len(choices)))]
                    nx = ue.x + ue.heading[0] * step
                    ny = ue.y + ue.heading[1] * step
            ue.x, ue.y = nx, ny
        else:
            turns = [
                h for h in _AXES
                if h != ue.heading
                and _inside_any(ue.region, ue.x + h[0] * step, ue.y + h[1] * step)
            ]
            if turns:
                ue.heading = turns[int(rng.integers(len(turns)))]
                ue.x += ue.heading[0] * step
                ue.y += ue.heading[1] * step
            # else: boxed in, stay put this tick
    else:
        if ue.waypoint is None:
            r = ue.region[int(rng.integers(len(ue.region)))]
            ue.waypoint = (float(rng.uniform(r.x0, r.x1)), float(rng.uniform(r.y0, r.y1)))
        wx, wy = ue.waypoint
        dx, dy = wx - ue.x, wy - ue.y
        dist = math.hypot(dx, dy)
        if dist <= step:
            ue.x, ue.y = wx, wy
            ue.waypoint = None
        else:
            ue.x += dx / dist * step
            ue.y += dy / dist * step
