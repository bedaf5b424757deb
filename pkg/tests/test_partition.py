import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_sampling.grid import GridSpec
from adaptive_sampling.partition import DYNAMIC, FIXED, PartitionSchedule, region_mask, update_mode, voronoi_assign
from oracles import brute_voronoi

GRID = GridSpec()
STARTS = ((3, 2), (3, 10), (7, 7))


def test_single_site_owns_everything():
    p = voronoi_assign(GRID, [(5, 5)])
    assert np.all(p.assignment == 0)
    assert region_mask(p, 0).all()


def test_default_robot_sites():
    p = voronoi_assign(GRID, STARTS)
    assert p.assignment[GRID.index_of((0, 0))] == 0
    np.testing.assert_array_equal(p.assignment, brute_voronoi(GRID.centers, STARTS))


def test_mirror_symmetry_and_midline_tie():
    g = GridSpec(9, 5, 1)  # x = 0..8, midline x = 4
    p = voronoi_assign(g, [(2, 2), (6, 2)])
    for ix in range(9):
        for iy in range(5):
            a = p.assignment[g.index_of((ix, iy))]
            b = p.assignment[g.index_of((8 - ix, iy))]
            if ix == 4:
                assert a == 0
            else:
                assert a != b


def test_duplicate_sites_lower_id_wins():
    p = voronoi_assign(GRID, [(5, 5), (5, 5), (0, 0)])
    assert not region_mask(p, 1).any()
    assert region_mask(p, 0).sum() + region_mask(p, 2).sum() == GRID.n_cells


def test_masks_cover_and_disjoint():
    p = voronoi_assign(GRID, STARTS)
    masks = [region_mask(p, i) for i in range(3)]
    assert sum(m.astype(int) for m in masks).tolist() == [1] * GRID.n_cells


def test_unknown_robot():
    p = voronoi_assign(GRID, STARTS)
    with pytest.raises(KeyError):
        region_mask(p, 3)


def test_site_validation():
    with pytest.raises(ValueError):
        voronoi_assign(GRID, [])
    with pytest.raises(ValueError):
        voronoi_assign(GRID, [(30, 3)])


def test_fixed_partition_is_constant():
    sched = PartitionSchedule(FIXED, GRID, STARTS)
    first = sched.current(STARTS)
    assert sched.current([(0, 0), (9, 14), (5, 5)]) == first


def test_dynamic_with_stationary_robots_equals_fixed():
    assert update_mode(DYNAMIC, GRID, STARTS, STARTS) == update_mode(FIXED, GRID, STARTS, STARTS)


def test_dynamic_tracks_moves():
    moved = [(3, 9), (3, 10), (7, 7)]  # robot 0 next to robot 1's site
    p = update_mode(DYNAMIC, GRID, STARTS, moved)
    np.testing.assert_array_equal(p.assignment, brute_voronoi(GRID.centers, moved))
    assert p != update_mode(FIXED, GRID, STARTS, moved)


def test_bad_mode():
    with pytest.raises(ValueError):
        PartitionSchedule("XVP", GRID, STARTS)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.booleans())
def test_nearest_site_optimality(seed, n, lattice):
    rng = np.random.default_rng(seed)
    sites = rng.uniform([0, 0], [9, 14], (n, 2))
    if lattice:  # half-meter lattice: many exact ties
        sites = np.round(sites * 2) / 2
    p = voronoi_assign(GRID, sites)
    np.testing.assert_array_equal(p.assignment, brute_voronoi(GRID.centers, sites))
    d = np.array([[np.hypot(*(c - s)) for s in sites] for c in GRID.centers])
    own = d[np.arange(GRID.n_cells), p.assignment]
    assert np.all(own[:, None] <= d + 1e-12)
