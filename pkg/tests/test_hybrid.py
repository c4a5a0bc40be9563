import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starris.errors import InvalidParameter, RegimeMismatch, SingularAngle
from starris.hybrid import (CoverageMode, RoomScene, angle_sweep, bs_directivity_db, check_regimes,
                            corner_region, coverage_grid, default_positions, gain_indoor_no_star,
                            gain_outdoor_no_star, gain_with_star, hybrid_summary, read_raster, strip_amplitudes,
                            write_raster, zone_bounds)
from starris.star_multiuser import (StrategyConfig, UserSpec, angle_between_users, ps_normalisation, sinc,
                                    xi_factor)

SCENE = RoomScene()
PS = StrategyConfig("PS")


@pytest.fixture(scope="module")
def grids():
    return {m: coverage_grid(SCENE, m, PS) for m in CoverageMode}


def test_directivity_pattern_points():
    assert bs_directivity_db(0.0) == 0.0
    assert bs_directivity_db(math.radians(65)) == pytest.approx(-12.0)
    assert bs_directivity_db(math.radians(65 * math.sqrt(2.5))) == pytest.approx(-30.0)
    assert bs_directivity_db(math.radians(120)) == -30.0


@given(st.floats(-math.pi, math.pi))
def test_directivity_even_and_clamped(th):
    assert bs_directivity_db(th) == bs_directivity_db(-th)
    assert -30.0 <= bs_directivity_db(th) <= 0.0


def test_directivity_continuous_at_clamp():
    th = math.radians(65 * math.sqrt(2.5))
    assert bs_directivity_db(th - 1e-9) == pytest.approx(bs_directivity_db(th + 1e-9), abs=1e-6)


def test_outdoor_law():
    g0 = gain_outdoor_no_star(SCENE, 0.0, 20.0, 0.01)
    assert g0 == pytest.approx(0.01 / 20.0)
    g65 = gain_outdoor_no_star(SCENE, math.radians(65), 20.0, 0.01)
    assert 10 * math.log10(g65 / g0) == pytest.approx(-12.0, abs=1e-12)
    flat = [gain_outdoor_no_star(SCENE, math.radians(a), 20.0, 0.01) for a in (110, 140, 170)]
    assert np.allclose(flat, g0 / 1000)


def test_indoor_law():
    h = lambda deg, r=2.0: gain_indoor_no_star(SCENE, math.radians(deg), r, 0.01)
    assert h(30) / h(90) == pytest.approx(4.0)
    assert h(45) / h(90) == pytest.approx(2.0)
    assert h(60, 4.0) / h(60, 2.0) == pytest.approx(0.5)
    with pytest.raises(SingularAngle):
        h(0)


@given(st.floats(1e-3, math.pi / 2), st.floats(0.01, 50.0))
def test_indoor_law_invariant(th, r):
    ref = gain_indoor_no_star(SCENE, math.pi / 2, 1.0, 1.0)
    val = gain_indoor_no_star(SCENE, th, r, 1.0) * math.sin(th) ** 2 * r
    assert abs(val / ref - 1) < 1e-12


def test_default_positions_geometry():
    near, far = default_positions(SCENE, math.radians(30), math.radians(20))
    s = SCENE.star_center
    assert np.linalg.norm(np.subtract(near, s)) == pytest.approx(SCENE.r_sn_m)
    assert math.atan2(near[1], near[0]) == pytest.approx(math.radians(30))
    assert np.linalg.norm(np.subtract(far, s)) == pytest.approx(SCENE.r_sf_m)


def test_regimes_and_summary():
    near, far = default_positions(SCENE)
    r_b = check_regimes(SCENE, near, far)
    assert r_b == pytest.approx(10.1, abs=0.01)
    with pytest.raises(RegimeMismatch):
        check_regimes(SCENE, near, (-5.0, 2.0, 0.0))
    s = hybrid_summary(SCENE)
    assert abs(s["dof_N"] - 12) <= 2
    assert s["dof_F"] == 1
    assert s["delta_v_F"] > 5 * s["v_star"]


def test_far_user_reg_equals_seg_for_same_group_sizes():
    lay = SCENE.star_layout()
    g = np.zeros(len(lay), int)
    g[: len(lay) // 2] = 1
    a = gain_with_star(SCENE, StrategyConfig("REG", grouping=tuple(g)), "F", layout=lay)
    b = gain_with_star(SCENE, StrategyConfig("SEG", grouping=tuple(np.roll(g, 7))), "F", layout=lay)
    assert a == b


def test_far_user_reg_with_no_near_elements_is_single_spot():
    lay = SCENE.star_layout()
    near, far = default_positions(SCENE)
    g = tuple([0] * len(lay))
    got = gain_with_star(SCENE, StrategyConfig("REG", grouping=g), "F", near, far, lay)
    r = np.linalg.norm(np.subtract(far, SCENE.star_center))
    p = SCENE.params
    vr = math.prod(SCENE.user_extents)
    expected = p.beta_sq * vr * lay.element_volume * len(lay) ** 2 / (4 * math.pi * r) ** 2
    assert got == pytest.approx(expected, rel=1e-6)


def test_far_user_ps_closed_form():
    lay = SCENE.star_layout()
    near, far = default_positions(SCENE)
    got = gain_with_star(SCENE, PS, "F", near, far, lay)
    lf, ln = SCENE.to_local(far), SCENE.to_local(near)
    users = [UserSpec.at(lf, SCENE.user_extents), UserSpec.at(ln, SCENE.user_extents)]
    A = ps_normalisation(SCENE.params, lay, users)
    s = sinc(xi_factor(SCENE.params, angle_between_users(lay.centroid(), lf, ln), lay.width_z))
    r = np.linalg.norm(np.subtract(lf, lay.centroid()))
    vr = math.prod(SCENE.user_extents)
    v_star = lay.element_volume * len(lay)
    expected = SCENE.params.beta_sq * vr * v_star * (1 + s) ** 2 / ((4 * math.pi * r) ** 2 * A.mean())
    assert abs(s) <= 1
    assert got == pytest.approx(expected, rel=1e-12)


def test_strip_amplitudes():
    ps = strip_amplitudes(SCENE, PS)
    assert np.allclose(ps, 1 / math.sqrt(2))
    seg = strip_amplitudes(SCENE, StrategyConfig("SEG"))
    ys = SCENE.window_center_y - SCENE.window_size_m / 2 + (np.arange(seg.size) + 0.5) * SCENE.window_size_m / seg.size
    assert np.all(seg[ys > SCENE.window_center_y + 0.01] == 1.0)
    reg = strip_amplitudes(SCENE, StrategyConfig("REG", rng_seed=3))
    assert abs(reg.sum() - reg.size / 2) <= 1
    assert np.array_equal(reg, strip_amplitudes(SCENE, StrategyConfig("REG", rng_seed=3)))


def test_no_window_minimum_in_corner(grids):
    x0, x1, y0, y1 = corner_region(SCENE)
    x, y = grids[CoverageMode.NO_WINDOW].argmin()
    assert x0 <= x <= x1 and y0 <= y <= y1


def test_open_window_maximum_on_boresight(grids):
    x, y = grids[CoverageMode.OPEN_WINDOW].argmax()
    half = SCENE.window_size_m / 2
    assert abs(y - SCENE.window_center_y) <= half
    assert x > 0.5


def test_star_ris_zone_gains(grids):
    z = zone_bounds(SCENE)
    star = grids[CoverageMode.STAR_RIS].region_mean_db(*z)
    assert star - grids[CoverageMode.NO_WINDOW].region_mean_db(*z) >= 5 - 2
    assert star - grids[CoverageMode.OPEN_WINDOW].region_mean_db(*z) >= 3 - 2


def test_star_ris_never_below_open_window_in_zone(grids):
    x0, x1, y0, y1 = zone_bounds(SCENE)
    g = grids[CoverageMode.STAR_RIS]
    X, Y = np.meshgrid(g.x, g.y)
    sel = (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)
    assert np.all(g.values[sel] >= grids[CoverageMode.OPEN_WINDOW].values[sel])


def test_guard_band_masked(grids):
    g = grids[CoverageMode.NO_WINDOW]
    X, Y = np.meshgrid(g.x, g.y)
    th = np.degrees(np.arctan2(Y, X))
    assert np.all(g.mask == (th < 2.0))


def test_raster_round_trip(tmp_path, grids):
    g = grids[CoverageMode.OPEN_WINDOW]
    path = tmp_path / "open.txt"
    write_raster(path, g)
    vals, cell, ref = read_raster(path)
    assert cell == pytest.approx(g.cell_size)
    assert np.array_equal(np.isnan(vals), g.mask)
    assert np.nanmax(np.abs(vals - g.values)) <= 0.005 + 1e-12


def test_coverage_rejects_coarse_grid():
    with pytest.raises(InvalidParameter):
        coverage_grid(SCENE, "NoWindow", resolution=5)


def test_angle_sweep_laws():
    th = np.radians([30, 65, 85])
    rows = angle_sweep(SCENE, th)
    ref = angle_sweep(SCENE, np.radians([89.999999]))
    assert rows[0, 2] - ref[0, 2] == pytest.approx(6.0206, abs=1e-3)
    f0 = 10 * math.log10(gain_outdoor_no_star(SCENE, 0.0, SCENE.r_sf_m, SCENE.user_aperture_m2))
    assert rows[1, 1] - f0 == pytest.approx(-12.0, abs=1e-9)
    with pytest.raises(InvalidParameter):
        angle_sweep(SCENE, [0.0])
