"""Planar-array steering, single-ray beamforming gain and gain fitting.

Angles are horizon-referenced degrees throughout the public interface
(elevation 0 at the horizon, positive up); the steering math converts to
the zenith-referenced convention of the underlying unit-vector form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NULL_FLOOR_DB = -80.0  # guard for array-factor nulls in dB pipelines


# All panels are mounted with broadside toward azimuth 90 degrees in the
# local (sector) frame, matching the beam-azimuth convention of the default
# beam grid.
PANEL_BORESIGHT_AZIMUTH_DEG = 90.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array; element positions in carrier wavelengths.

    Rows are stacked vertically (z), columns horizontally (x); the panel
    broadside points along +y (local azimuth 90).
    """

    panel_rows: int
    panel_cols: int
    v_spacing: float = 0.7
    h_spacing: float = 0.5

    def __post_init__(self):
        if self.panel_rows < 1 or self.panel_cols < 1:
            raise ValueError("panel dimensions must be >= 1")

    @property
    def n_elements(self) -> int:
        return self.panel_rows * self.panel_cols

    def element_positions(self) -> np.ndarray:
        """(S, 3) coordinates in wavelengths, centered on the panel."""
        r = (np.arange(self.panel_rows) - (self.panel_rows - 1) / 2) * self.v_spacing
        c = (np.arange(self.panel_cols) - (self.panel_cols - 1) / 2) * self.h_spacing
        zz, xx = np.meshgrid(r, c, indexing="ij")
        pos = np.zeros((self.n_elements, 3))
        pos[:, 0] = xx.ravel()
        pos[:, 2] = zz.ravel()
        return pos


def direction_unit_vector(elevation_deg: float, azimuth_deg: float) -> np.ndarray:
    """Unit vector (sin t cos p, sin t sin p, cos t) with t the zenith angle."""
    zen = math.radians(90.0 - elevation_deg)
    az = math.radians(azimuth_deg)
    return np.array(
        [math.sin(zen) * math.cos(az), math.sin(zen) * math.sin(az), math.cos(zen)]
    )


def steering_weights_for_positions(
    positions: np.ndarray, elevation_deg: float, azimuth_deg: float
) -> np.ndarray:
    """Unit-magnitude phase weights for arbitrary element positions (wavelengths)."""
    r = direction_unit_vector(elevation_deg, azimuth_deg)
    return np.exp(2j * np.pi * (np.asarray(positions) @ r))


def steering_weights(
    geometry: ArrayGeometry, elevation_deg: float, azimuth_deg: float
) -> np.ndarray:
    """Per-element unit-magnitude phase weights toward the given direction."""
    return steering_weights_for_positions(
        geometry.element_positions(), elevation_deg, azimuth_deg
    )


@dataclass(frozen=True)
class ElementPattern:
    """Parabolic-in-dB directional element pattern.

    The attenuation is quadratic in angle off boresight, clipped per plane
    at `sidelobe_floor_db` and jointly at the same floor.
    """

    max_gain_dbi: float = 8.0
    v_3db_beamwidth_deg: float = 65.0
    h_3db_beamwidth_deg: float = 65.0
    sidelobe_floor_db: float = 30.0
    isotropic: bool = False

    def gain_db(self, elevation_deg, azimuth_deg):
        if self.isotropic:
            return np.zeros(np.broadcast(np.asarray(elevation_deg),
                                         np.asarray(azimuth_deg)).shape) + 0.0
        av = np.minimum(
            12.0 * (np.asarray(elevation_deg) / self.v_3db_beamwidth_deg) ** 2,
            self.sidelobe_floor_db,
        )
        ah = np.minimum(
            12.0 * (np.asarray(azimuth_deg) / self.h_3db_beamwidth_deg) ** 2,
            self.sidelobe_floor_db,
        )
        return self.max_gain_dbi - np.minimum(av + ah, self.sidelobe_floor_db)


ISOTROPIC = ElementPattern(max_gain_dbi=0.0, isotropic=True)


def element_pattern_3gpp(elevation_deg, azimuth_deg, params: ElementPattern | None = None):
    """Directional element gain in dB; angles relative to element boresight."""
    return (params or ElementPattern()).gain_db(elevation_deg, azimuth_deg)


@dataclass(frozen=True)
class Beam:
    index: int
    elevation_deg: float
    azimuth_deg: float
    geometry: ArrayGeometry


# Elevation table of the default 12-beam grid: 15 deg raster for the eight
# narrow far-range beams, 30 deg raster for the four wide near-range beams.
DEFAULT_BEAM_ELEVATIONS_DEG = (
    -52.5, -37.5, -22.5, -7.5, 7.5, 22.5, 37.5, 52.5, -45.0, -15.0, 15.0, 45.0,
)


def default_beam_set() -> list[Beam]:
    """Twelve beams: 16x8 panels at azimuth 90, 8x4 panels at azimuth 97."""
    narrow = ArrayGeometry(16, 8)
    wide = ArrayGeometry(8, 4)
    beams = []
    for b, elev in enumerate(DEFAULT_BEAM_ELEVATIONS_DEG, start=1):
        geom = narrow if b <= 8 else wide
        az = 90.0 if b <= 8 else 97.0
        beams.append(Beam(index=b, elevation_deg=elev, azimuth_deg=az, geometry=geom))
    return beams


def single_ray_gain(
    beam: Beam,
    ray_elevation_deg: float,
    ray_azimuth_deg: float,
    element_pattern: ElementPattern = ISOTROPIC,
) -> float:
    """Beamforming gain (dB) of one ray, referenced to a single element.

    Matched combining of the steering weights with the array response gives
    |w^H a|^2 / S, which is S (coherent) when the beam points at the ray.
    Nulls are clamped to NULL_FLOOR_DB before the element gain is added.
    """
    w = steering_weights(beam.geometry, beam.elevation_deg, beam.azimuth_deg)
    a = steering_weights(beam.geometry, ray_elevation_deg, ray_azimuth_deg)
    s = beam.geometry.n_elements
    af = abs(np.vdot(w, a)) ** 2 / s
    af_db = NULL_FLOOR_DB if af < 10 ** (NULL_FLOOR_DB / 10) else 10 * math.log10(af)
    elem_db = float(
        element_pattern.gain_db(
            ray_elevation_deg, ray_azimuth_deg - PANEL_BORESIGHT_AZIMUTH_DEG
        )
    )
    return af_db + elem_db


def apply_beam_weights(per_element_responses: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Beam-combined responses h_u = sum_s w_s h_{u,s} / sqrt(S)."""
    h = np.atleast_2d(np.asarray(per_element_responses))
    w = np.asarray(weights)
    if h.shape[1] != w.shape[0]:
        raise ValueError(f"dimension mismatch: {h.shape[1]} responses vs {w.shape[0]} weights")
    return h @ w / math.sqrt(len(w))


@dataclass(frozen=True)
class GainFitModel:
    """Clamped-linear map from single-ray gain to multipath gain, in dB."""

    condition: str  # "LOS" | "NLOS"
    slope: float
    intercept_db: float
    floor_db: float

    def __call__(self, g_single_db):
        return np.maximum(self.slope * np.asarray(g_single_db) + self.intercept_db,
                          self.floor_db)


# Saturation floors observed for the multipath gain at low single-ray gain.
DEFAULT_FLOOR_DB = {"LOS": -20.0, "NLOS": 0.0}

# Calibration-knob defaults for when no gain samples are available to fit.
DEFAULT_GAIN_FIT = {
    "LOS": GainFitModel("LOS", 1.0, 0.0, -20.0),
    "NLOS": GainFitModel("NLOS", 0.6, -3.0, 0.0),
}


def fit_gain_model(
    samples,
    condition: str,
    floor_db: float | None = None,
) -> GainFitModel:
    """Ordinary least squares in dB-dB space plus the condition's floor.

    `samples` is a sequence of (g_single_db, g_multipath_db) pairs; needs at
    least 10 samples spanning at least 10 dB of single-ray gain.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 10:
        raise ValueError("need >= 10 (g_single_db, g_multipath_db) samples")
    gs, gm = arr[:, 0], arr[:, 1]
    if np.ptp(gs) < 10.0:
        raise ValueError("samples must span >= 10 dB of single-ray gain")
    if np.ptp(gs) == 0:
        raise ValueError("degenerate regression: zero variance in g_single")
    slope, intercept = np.polyfit(gs, gm, 1)
    if floor_db is None:
        floor_db = DEFAULT_FLOOR_DB[condition]
    return GainFitModel(condition, float(slope), float(intercept), float(floor_db))


def apply_gain_model(model: GainFitModel, g_single_db):
    return model(g_single_db)
