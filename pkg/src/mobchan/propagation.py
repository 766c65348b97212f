"""Propagation: urban-microcell path loss, geometric LOS and shadowing.

The path-loss model is the standard UMi street-canyon distance formula pair
(LOS dual-slope with breakpoint, NLOS as max of LOS and the NLOS fit).  LOS
is decided deterministically by testing the 2-D site-to-terminal segment
against the scenario's building rectangles.  The interface is pluggable so
an externally supplied deterministic model can replace it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fading import SPEED_OF_LIGHT


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x, y):
        return (self.x0 <= x) & (x <= self.x1) & (self.y0 <= y) & (y <= self.y1)

    @property
    def center(self):
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))


def segments_intersect_rect(ax, ay, bx, by, rect: Rect, eps: float = 1e-6) -> np.ndarray:
    """Vectorized slab test: does segment a->b pass through the open rectangle?

    Endpoints exactly on the boundary do not count as blocked, so rooftop
    sites placed on building corners are not occluded by their own block.
    """
    ax, ay, bx, by = (np.asarray(v, dtype=float) for v in (ax, ay, bx, by))
    dx = bx - ax
    dy = by - ay
    t0 = np.zeros(np.broadcast(ax, bx).shape)
    t1 = np.ones_like(t0)
    ok = np.ones(t0.shape, dtype=bool)
    for d, a, lo, hi in ((dx, ax, rect.x0, rect.x1), (dy, ay, rect.y0, rect.y1)):
        with np.errstate(divide="ignore", invalid="ignore"):
            near = (lo - a) / d
            far = (hi - a) / d
        swap = near > far
        near2 = np.where(swap, far, near)
        far2 = np.where(swap, near, far)
        parallel = d == 0
        inside = (a > lo) & (a < hi)
        t0 = np.where(parallel, np.where(inside, t0, 2.0), np.maximum(t0, near2))
        t1 = np.where(parallel, np.where(inside, t1, -1.0), np.minimum(t1, far2))
        ok &= ~parallel | inside
    overlap = np.maximum(t0, 0.0) + eps < np.minimum(t1, 1.0) - eps
    return overlap & ok


def line_of_sight(site_xy, ue_x, ue_y, buildings) -> np.ndarray:
    """True where no building rectangle occludes the 2-D site-to-UE segment."""
    ue_x = np.asarray(ue_x, dtype=float)
    ue_y = np.asarray(ue_y, dtype=float)
    blocked = np.zeros(ue_x.shape, dtype=bool)
    for b in buildings:
        blocked |= segments_intersect_rect(site_xy[0], site_xy[1], ue_x, ue_y, b)
    return ~blocked


@dataclass(frozen=True)
class UmiParams:
    bs_height_m: float = 10.0
    ut_height_m: float = 1.5
    effective_env_height_m: float = 1.0
    min_distance_m: float = 5.0


def umi_path_loss_db(d2d_m, carrier_hz: float, los: np.ndarray,
                     params: UmiParams | None = None) -> np.ndarray:
    """UMi street-canyon path loss in dB for 2-D distances and a LOS mask."""
    p = params or UmiParams()
    d2d = np.maximum(np.asarray(d2d_m, dtype=float), p.min_distance_m)
    dh = p.bs_height_m - p.ut_height_m
    d3d = np.sqrt(d2d**2 + dh**2)
    fc_ghz = carrier_hz / 1e9

    h_bs = p.bs_height_m - p.effective_env_height_m
    h_ut = p.ut_height_m - p.effective_env_height_m
    d_bp = 4.0 * h_bs * h_ut * carrier_hz / SPEED_OF_LIGHT

    pl1 = 32.4 + 21.0 * np.log10(d3d) + 20.0 * math.log10(fc_ghz)
    pl2 = (
        32.4 + 40.0 * np.log10(d3d) + 20.0 * math.log10(fc_ghz)
        - 9.5 * math.log10(d_bp**2 + dh**2)
    )
    pl_los = np.where(d2d <= d_bp, pl1, pl2)

    pl_nlos_fit = (
        35.3 * np.log10(d3d) + 22.4 + 21.3 * math.log10(fc_ghz)
        - 0.3 * (p.ut_height_m - 1.5)
    )
    pl_nlos = np.maximum(pl_los, pl_nlos_fit)
    return np.where(np.asarray(los, dtype=bool), pl_los, pl_nlos)


@dataclass
class ShadowingProcess:
    """Spatially correlated log-normal shadowing, one value per link.

    First-order autoregression along the traveled distance with separate
    LOS/NLOS decorrelation distances; condition changes redraw the sample.
    """

    n_links: int
    sigma_los_db: float = 4.0
    sigma_nlos_db: float = 7.8
    decorr_los_m: float = 10.0
    decorr_nlos_m: float = 13.0
    seed: int = 0

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)
        self._value = np.zeros(self.n_links)
        self._los = None

    def update(self, moved_m: np.ndarray, los: np.ndarray) -> np.ndarray:
        los = np.asarray(los, dtype=bool)
        sigma = np.where(los, self.sigma_los_db, self.sigma_nlos_db)
        if self._los is None:
            self._value = self._rng.normal(0.0, 1.0, self.n_links) * sigma
        else:
            dcorr = np.where(los, self.decorr_los_m, self.decorr_nlos_m)
            rho = np.exp(-np.asarray(moved_m) / dcorr)
            innov = self._rng.normal(0.0, 1.0, self.n_links)
            self._value = rho * self._value + np.sqrt(1 - rho**2) * innov * sigma
            flipped = self._los != los
            redraw = self._rng.normal(0.0, 1.0, self.n_links)
            self._value = np.where(flipped, redraw * sigma, self._value)
        self._los = los.copy()
        return self._value
