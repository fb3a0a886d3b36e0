import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssplabel.errors import ConfigError, SeedOutOfBoundsError
from ssplabel.partition import GrowConfig, partition_boundaries, region_grow, spatial_partition

from oracles import bfs_grow, brute_boundary, brute_partition


def test_tie_goes_to_lower_index():
    p = spatial_partition(4, 4, [(0.5, 0.5), (3.5, 3.5)])
    # cell (row 1, col 2) has centre (2.5, 1.5): squared distance 5 to both seeds
    assert p.owner[1, 2] == 0
    assert p.owner[2, 1] == 0
    np.testing.assert_array_equal(p.owner, brute_partition(4, 4, [(0.5, 0.5), (3.5, 3.5)]))


def test_single_seed_owns_everything():
    p = spatial_partition(7, 5, [(3.2, 1.1)])
    assert (p.owner == 0).all()
    assert not partition_boundaries(p).any()


def test_zero_seeds_errors():
    with pytest.raises(ValueError):
        spatial_partition(4, 4, [])


def test_seed_outside_grid():
    with pytest.raises(SeedOutOfBoundsError):
        spatial_partition(4, 4, [(5.0, 1.0)])


def test_random_64_grid_20_seeds():
    rng = np.random.default_rng(4)
    seeds = rng.uniform(0, 64, (20, 2))
    np.testing.assert_array_equal(spatial_partition(64, 64, seeds).owner, brute_partition(64, 64, seeds))


def test_left_right_boundary_columns():
    p = spatial_partition(8, 3, [(1.0, 1.5), (7.0, 1.5)])
    b = partition_boundaries(p)
    cols = np.flatnonzero(b.any(axis=0))
    assert cols.tolist() == [3, 4]
    assert b[:, 3].all() and b[:, 4].all()


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_partition_and_boundary_match_brute(w, h, k, seed):
    rng = np.random.default_rng(seed)
    # half-cell grid so exact ties are common
    seeds = rng.integers(0, 2 * w + 1, k) / 2, rng.integers(0, 2 * h + 1, k) / 2
    seeds = np.c_[seeds]
    p = spatial_partition(w, h, seeds)
    np.testing.assert_array_equal(p.owner, brute_partition(w, h, seeds))
    np.testing.assert_array_equal(partition_boundaries(p), brute_boundary(p.owner))


# -- region growing ----------------------------------------------------------

def plus_scene():
    v = np.zeros((9, 9))
    v[4, 1:8] = 1.0
    v[1:8, 4] = 1.0
    return v


def test_grow_uniform_plus():
    v = plus_scene()
    (m,) = region_grow(v, [(4.5, 4.5)], None, GrowConfig(tolerance=0.5))
    np.testing.assert_array_equal(m.mask, v == 1.0)
    assert m.seed_cell == (4, 4) and not m.truncated


def test_grow_respects_allowed():
    v = plus_scene()
    allowed = np.zeros_like(v, dtype=bool)
    allowed[:, :5] = True
    (m,) = region_grow(v, [(4.5, 4.5)], allowed, GrowConfig(tolerance=0.5))
    np.testing.assert_array_equal(m.mask, (v == 1.0) & allowed)


def test_grow_ramp_matches_bfs():
    v = np.tile(np.linspace(0, 1, 30), (12, 1))
    allowed = np.ones_like(v, dtype=bool)
    (m,) = region_grow(v, [(15.5, 6.5)], allowed, GrowConfig(tolerance=0.2))
    expect = bfs_grow(v, (6, 15), allowed, 0.2)
    np.testing.assert_array_equal(m.mask, expect)
    assert np.abs(v[m.mask] - v[6, 15]).max() <= 0.2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([4, 8]), st.floats(0, 0.6))
def test_grow_matches_bfs_random(seed, conn, tol):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(3, 16, 2)
    v = rng.integers(0, 6, (h, w)) / 5.0
    allowed = rng.uniform(size=(h, w)) < 0.8
    cell = (int(rng.integers(h)), int(rng.integers(w)))
    (m,) = region_grow(v, [(cell[1] + 0.5, cell[0] + 0.5)], allowed, GrowConfig(tolerance=tol, connectivity=conn))
    np.testing.assert_array_equal(m.mask, bfs_grow(v, cell, allowed, tol, conn))


def test_seed_not_allowed_is_singleton():
    v = np.zeros((4, 4))
    allowed = np.ones((4, 4), dtype=bool)
    allowed[1, 1] = False
    (m,) = region_grow(v, [(1.5, 1.5)], allowed)
    assert m.area == 1 and m.mask[1, 1]


def test_grow_stays_in_owner_cell():
    v = np.ones((10, 10)) * 0.5
    p = spatial_partition(10, 10, [(2.5, 2.5), (7.5, 7.5)])
    masks = region_grow(v, [(2.5, 2.5), (7.5, 7.5)], None, GrowConfig(), owner=p.owner)
    for k, m in enumerate(masks):
        assert (p.owner[m.mask] == k).all()
        assert m.area == (p.owner == k).sum()
    assert not (masks[0].mask & masks[1].mask).any()


def test_owner_ids_and_instance_ids():
    v = np.ones((6, 6))
    p = spatial_partition(6, 6, [(1, 1), (5, 5), (1, 5)])
    (m,) = region_grow(v, [(5, 5)], None, GrowConfig(), owner=p.owner, owner_ids=[1], instance_ids=[17])
    assert m.instance_index == 17
    np.testing.assert_array_equal(m.mask, p.owner == 1)


def test_max_area_truncates():
    v = np.zeros((10, 10))
    (m,) = region_grow(v, [(5, 5)], None, GrowConfig(max_area=7))
    assert m.area == 7 and m.truncated


def test_running_mean_mode_drifts():
    # seed-value reference stops 8 steps out; running mean creeps along the ramp
    v = np.tile(np.arange(40) / 64, (3, 1))
    (seeded,) = region_grow(v, [(0.5, 1.5)], None, GrowConfig(tolerance=0.125))
    (running,) = region_grow(v, [(0.5, 1.5)], None, GrowConfig(tolerance=0.125, reference="running_mean"))
    assert seeded.area == 3 * 9
    assert running.area > seeded.area


def test_grow_seed_outside():
    with pytest.raises(SeedOutOfBoundsError):
        region_grow(np.zeros((3, 3)), [(4, 1)])


@pytest.mark.parametrize("kw", [dict(tolerance=-1), dict(connectivity=6), dict(reference="x"), dict(max_area=0)])
def test_grow_config_validation(kw):
    with pytest.raises(ConfigError):
        GrowConfig(**kw)
