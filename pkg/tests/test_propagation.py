"""Geometry occlusion, UMi path-loss and shadowing tests."""

import numpy as np
import pytest

from mobchan.propagation import (
    Rect,
    ShadowingProcess,
    UmiParams,
    line_of_sight,
    segments_intersect_rect,
    umi_path_loss_db,
)


def test_segment_through_rect_is_blocked():
    r = Rect(10.0, 10.0, 20.0, 20.0)
    assert segments_intersect_rect(0.0, 15.0, 30.0, 15.0, r)
    assert segments_intersect_rect(15.0, 0.0, 15.0, 30.0, r)
    # diagonal through a corner region
    assert segments_intersect_rect(0.0, 0.0, 30.0, 30.0, r)


def test_segment_outside_rect_is_clear():
    r = Rect(10.0, 10.0, 20.0, 20.0)
    assert not segments_intersect_rect(0.0, 0.0, 30.0, 5.0, r)
    assert not segments_intersect_rect(0.0, 25.0, 30.0, 25.0, r)
    # short segment entirely before the rectangle
    assert not segments_intersect_rect(0.0, 15.0, 5.0, 15.0, r)


def test_boundary_grazing_not_blocked():
    r = Rect(10.0, 10.0, 20.0, 20.0)
    # running exactly along an edge does not count as passing through
    assert not segments_intersect_rect(0.0, 10.0, 30.0, 10.0, r)
    assert not segments_intersect_rect(20.0, 0.0, 20.0, 30.0, r)
    # endpoint on the boundary, heading away
    assert not segments_intersect_rect(10.0, 15.0, 0.0, 15.0, r)


def test_line_of_sight_vectorized():
    buildings = (Rect(10.0, 10.0, 20.0, 20.0),)
    ue_x = np.array([30.0, 5.0, 25.0])
    ue_y = np.array([15.0, 5.0, 25.0])
    los = line_of_sight((0.0, 15.0), ue_x, ue_y, buildings)
    assert los.tolist() == [False, True, False]
    # no buildings: everything is LOS
    assert np.all(line_of_sight((0.0, 0.0), ue_x, ue_y, ()))


def test_umi_nlos_never_below_los():
    d = np.linspace(5.0, 500.0, 200)
    los = umi_path_loss_db(d, 28e9, np.ones_like(d, dtype=bool))
    nlos = umi_path_loss_db(d, 28e9, np.zeros_like(d, dtype=bool))
    assert np.all(nlos >= los - 1e-9)
    assert np.all(np.diff(los) > 0)


def test_umi_dual_slope_continuous_at_breakpoint():
    p = UmiParams()
    from mobchan.fading import SPEED_OF_LIGHT

    h_bs = p.bs_height_m - p.effective_env_height_m
    h_ut = p.ut_height_m - p.effective_env_height_m
    d_bp = 4.0 * h_bs * h_ut * 28e9 / SPEED_OF_LIGHT
    below = umi_path_loss_db(d_bp - 1e-6, 28e9, True, p)
    above = umi_path_loss_db(d_bp + 1e-6, 28e9, True, p)
    assert float(above) == pytest.approx(float(below), abs=1e-3)


def test_umi_min_distance_clamp():
    near = umi_path_loss_db(0.1, 28e9, True)
    at_min = umi_path_loss_db(5.0, 28e9, True)
    assert float(near) == pytest.approx(float(at_min))


def test_shadowing_deterministic_and_redraws():
    kwargs = dict(n_links=4, seed=9)
    a = ShadowingProcess(**kwargs)
    b = ShadowingProcess(**kwargs)
    los = np.array([True, True, False, False])
    moved = np.full(4, 0.1)
    for _ in range(5):
        va = a.update(moved, los)
        vb = b.update(moved, los)
        assert np.array_equal(va, vb)

    # small moves keep the process strongly correlated...
    before = a.update(moved, los).copy()
    after = a.update(np.full(4, 1e-3), los)
    assert np.all(np.abs(after - before) < 3.0)
    # ...but a LOS flip forces an independent redraw
    flipped = los.copy()
    flipped[0] = ~flipped[0]
    c = ShadowingProcess(**kwargs)
    c.update(moved, los)
    base = c.update(np.full(4, 1e-6), los).copy()
    d = ShadowingProcess(**kwargs)
    d.update(moved, los)
    redrawn = d.update(np.full(4, 1e-6), flipped)
    assert redrawn[0] != pytest.approx(base[0])
    assert np.allclose(redrawn[1:], base[1:])
