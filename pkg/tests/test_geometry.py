import math

import numpy as np
import pytest

from fraclab.geometry import (DiskDomain, ResolutionError, SampleConfig,
                              ball_tube_profile, boundary_tube_ball_volume,
                              comb_domain, dist_to_boundary, inner_tube_volume,
                              koch_area, koch_prefractal, rectangle,
                              plumpness_check, reduction_domain, unit_square)

SQRT3 = math.sqrt(3.0)


def test_disk_exact_attributes(disk):
    assert disk.area() == math.pi
    assert disk.perimeter == 2 * math.pi
    assert disk.diameter == 2.0
    assert disk.inradius() == 1.0
    assert dist_to_boundary(disk, (0.0, 0.0)) == 1.0
    assert dist_to_boundary(disk, (3.0, 0.0)) == 2.0


def test_square_exact_attributes(square):
    assert square.area() == 1.0
    assert square.perimeter == 4.0
    assert np.isclose(square.diameter, math.sqrt(2.0))
    assert np.isclose(dist_to_boundary(square, (0.5, 0.5)), 0.5)
    assert np.isclose(dist_to_boundary(square, (0.25, 0.5)), 0.25)


def test_rectangle_validation():
    with pytest.raises(ValueError):
        rectangle(0, 0, 0, 1)


def test_koch_exact_attributes():
    for level in (0, 1, 4):
        kd = koch_prefractal(level)
        assert len(kd.loops[0]) == 3 * 4**level
        assert np.isclose(kd.perimeter, 3.0 * (4.0 / 3.0) ** level)
        assert np.isclose(kd.area(), koch_area(level))
        # shoelace agrees with the closed-form series
        assert np.isclose(kd.shoelace_area(), koch_area(level), rtol=1e-12)
        assert kd.scale_floor == 10.0 * 3.0 ** (-level)
    assert np.isclose(koch_area(0), SQRT3 / 4.0)
    with pytest.raises(ValueError):
        koch_prefractal(11)


def test_koch_area_increases_to_limit():
    areas = [koch_area(k) for k in range(9)]
    assert all(b > a for a, b in zip(areas, areas[1:]))
    # limit area is 2*sqrt(3)/5; level-8 remainder is about 4e-4
    assert abs(areas[-1] - 2 * SQRT3 / 5) < 6e-4


def test_inner_tube_disk_exact(disk, cfg):
    # |Omega_r| = pi (1 - (1-r)^2) on the unit disk
    for r in (0.05, 0.2, 0.5):
        want = math.pi * (1.0 - (1.0 - r) ** 2)
        mc = inner_tube_volume(disk, r, cfg)
        assert abs(mc.volume - want) < 4 * mc.stderr + 1e-12
        grid = inner_tube_volume(disk, r, SampleConfig(grid_h=r / 16), method="grid")
        assert abs(grid.volume - want) < 0.05 * want


def test_inner_tube_square_exact(square, cfg):
    for r in (0.1, 0.3):
        want = 1.0 - (1.0 - 2 * r) ** 2
        mc = inner_tube_volume(square, r, cfg)
        assert abs(mc.volume - want) < 4 * mc.stderr + 1e-12


def test_inner_tube_rejects_bad_r(disk, cfg):
    with pytest.raises(ValueError):
        inner_tube_volume(disk, 0.0, cfg)


def test_tube_monotone_in_r(koch3, cfg):
    vols = [inner_tube_volume(koch3, r, cfg).volume for r in (0.02, 0.05, 0.1, 0.2)]
    assert all(b >= a for a, b in zip(vols, vols[1:]))


def test_ball_tube_profile_nested(disk, cfg):
    x = np.array([1.0, 0.0])
    prof = ball_tube_profile(disk, x, 0.5, [0.05, 0.1, 0.2], cfg)
    vols = [t.volume for t in prof]
    assert all(b >= a for a, b in zip(vols, vols[1:]))
    # two-sided 0.2-strip across a radius-0.5 ball: flat-strip area 0.389
    assert 0.3 < vols[-1] < 0.45


def test_ball_tube_profile_validation(disk, cfg):
    with pytest.raises(ValueError):
        ball_tube_profile(disk, (1.0, 0.0), 0.5, [0.6], cfg)
    with pytest.raises(ValueError):
        ball_tube_profile(disk, (1.0, 0.0), 2.5, [0.1], cfg)


def test_boundary_tube_ball_grid_vs_mc(square, cfg):
    x = np.array([0.5, 0.0])
    mc = boundary_tube_ball_volume(square, x, 0.1, 0.4, cfg)
    grid = boundary_tube_ball_volume(square, x, 0.1, 0.4, SampleConfig(grid_h=0.1 / 8),
                                     method="grid")
    assert abs(mc.volume - grid.volume) < 5 * mc.stderr + 0.01 * grid.volume
    with pytest.raises(ValueError):
        boundary_tube_ball_volume(square, (0.5, 0.5), 0.1, 0.4, cfg)


def test_boundary_tube_grid_refuses_coarse(square):
    with pytest.raises(ResolutionError):
        boundary_tube_ball_volume(square, (0.5, 0.0), 0.1, 0.4,
                                  SampleConfig(grid_h=0.1), method="grid")


def test_comb_area_closed_form(comb8):
    # unit square minus 8 slots of width 1/32, depth 0.75
    want = 1.0 - 8 * (1.0 / 32.0) * 0.75
    assert np.isclose(comb8.area(), want, rtol=1e-12)


def test_inradius_square(square, cfg_mid):
    r = square.inradius(cfg_mid)
    assert 0.47 < r <= 0.5


def test_boundary_points_lie_on_boundary(koch3, rng):
    pts = koch3.boundary_points(500, rng)
    assert float(koch3.dist_boundary(pts).max()) < 1e-12


def test_plumpness_disk(disk, cfg):
    rep = plumpness_check(disk, kappa=0.3, cfg=cfg)
    assert rep.passed
    assert rep.worst_ratio >= 0.3
    rep2 = plumpness_check(disk, kappa=0.6, cfg=cfg)
    assert not rep2.passed  # 0.6 * (0.98 * diam) exceeds the inradius
    with pytest.raises(ValueError):
        plumpness_check(disk, kappa=1.5, cfg=cfg)


def test_plumpness_koch(koch3, cfg):
    assert plumpness_check(koch3, kappa=0.05, cfg=cfg).passed


def test_reduction_domain_geometry(disk):
    G = reduction_domain(disk)
    assert np.allclose(G.x0, [0.0, 0.0])
    M = disk.diameter
    assert G.M == M and G.ring_radius == 2 * M and G.clip_radius == 8 * M
    pts = np.array([
        [0.0, 0.0],        # inside Omega
        [1.5, 0.0],        # gap between Omega and the ring
        [2 * M + 0.5, 0.0],  # far component
    ])
    assert list(G.inside(pts)) == [True, False, True]
    # on Omega, d_G = d_Omega (pieces are >= M apart)
    assert np.isclose(float(G.dist_boundary(pts[:1])[0]), 1.0)
    assert np.isclose(float(G.dist_boundary(pts[2:])[0]), 0.5)


def test_reduction_domain_x0_search():
    # bbox center of an L-shape is outside; the fallback stream must find
    # an interior x0 deterministically
    from fraclab.geometry import polygon_domain
    L = polygon_domain([[0, 0], [1, 0], [1, 0.2], [0.2, 0.2], [0.2, 1], [0, 1]],
                       label="lshape")
    assert not bool(L.inside(np.array([[0.5, 0.5]]))[0])
    G1 = reduction_domain(L)
    G2 = reduction_domain(L)
    assert np.array_equal(G1.x0, G2.x0)
    assert bool(L.inside(G1.x0[None, :])[0])


def test_reduction_domain_rejects_outside_x0(disk):
    with pytest.raises(ValueError):
        reduction_domain(disk, x0=(5.0, 0.0))
