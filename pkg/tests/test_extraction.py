import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssplabel.errors import ConfigError, DegenerateMaskError
from ssplabel.experiments import strategy_table_for, suite_configs
from ssplabel.extraction import (
    MINAREA_RECT,
    PCA_MINMAX,
    ExtractConfig,
    dota_preset,
    mask_to_rbox_hybrid,
    normalize_class_map,
    partition_seeds_for_class,
    sspbe,
    sspbe_detailed,
)
from ssplabel.geometry import RotatedBox, min_area_rect, pca_minmax_rect, points_in_box, rotated_iou
from ssplabel.maps import GtPoint, InstanceMask, SemanticMap
from ssplabel.partition import spatial_partition
from ssplabel.synth import generate_scene


def sem(*channels):
    return SemanticMap(np.stack(channels))


def test_normalize_doubles_half_max():
    ch = np.array([[0.5, 0.25], [0.0, 0.1]])
    np.testing.assert_allclose(normalize_class_map(sem(ch), 1), ch * 2)


def test_normalize_zero_channel():
    assert not normalize_class_map(sem(np.zeros((3, 3))), 1).any()


def test_normalize_constant():
    np.testing.assert_array_equal(normalize_class_map(sem(np.full((2, 2), 0.3)), 1), np.ones((2, 2)))


# -- seeds -------------------------------------------------------------------

def test_harbor_excludes_ship_keeps_plane():
    p = dota_preset()
    ids = p["class_ids"]
    cfg = ExtractConfig(incompatible_pairs=p["incompatible_pairs"])
    gts = [GtPoint(1, 1, ids["harbor"]), GtPoint(2, 2, ids["ship"]), GtPoint(3, 3, ids["plane"])]
    assert partition_seeds_for_class(gts, ids["harbor"], cfg).tolist() == [0, 2]
    assert partition_seeds_for_class(gts, ids["ship"], cfg).tolist() == [1, 2]


def test_no_pairs_all_seeds():
    gts = [GtPoint(1, 1, 1), GtPoint(2, 2, 2)]
    assert partition_seeds_for_class(gts, 1, ExtractConfig()).tolist() == [0, 1]


def test_absent_class_skipped():
    # channel 2 has no annotations; extraction still returns one box per point
    ch = np.zeros((20, 20))
    ch[5:10, 5:15] = 1
    out = sspbe(sem(ch, np.ones((20, 20))), [GtPoint(10, 7.5, 1)])
    assert len(out) == 1 and out.classes == [1]


def test_dota_preset_shape():
    p = dota_preset()
    assert len(p["class_ids"]) == 15
    assert p["strategy_table"][p["class_ids"]["tennis-court"]] == MINAREA_RECT
    assert p["strategy_table"][p["class_ids"]["small-vehicle"]] == PCA_MINMAX


def test_config_validation():
    with pytest.raises(ConfigError):
        ExtractConfig(score_threshold=1.5)
    with pytest.raises(ConfigError):
        ExtractConfig(strategy_table={1: "ellipse"})


# -- mask to box ---------------------------------------------------------------

def test_item_mask_worked_example():
    pts = np.array([(-1, 0), (3, 0), (0, 1), (0, -1)], dtype=float)
    b = mask_to_rbox_hybrid(pts, (0, 0), 1, ExtractConfig(strategy_table={1: PCA_MINMAX}))
    assert b.as_tuple() == (0.0, 0.0, 6.0, 2.0, 0.0)


def test_field_mask_axis_aligned_rectangle():
    m = np.zeros((20, 30), dtype=bool)
    m[4:10, 5:25] = True
    mask = InstanceMask(0, m, False, (6, 12))
    b = mask_to_rbox_hybrid(mask, GtPoint(3, 3, 2), 2, ExtractConfig(strategy_table={2: MINAREA_RECT}))
    # rectangle spanned by the cell centres, anchor ignored
    assert (b.cx, b.cy) == pytest.approx((15.0, 7.0))
    assert sorted((b.w, b.h)) == pytest.approx([5.0, 19.0])
    assert min(abs(b.theta), abs(abs(b.theta) - math.pi / 2)) < 1e-12


def test_degenerate_mask_errors():
    m = np.zeros((5, 5), dtype=bool)
    m[2, 2] = True
    with pytest.raises(DegenerateMaskError):
        mask_to_rbox_hybrid(InstanceMask(0, m, False, (2, 2)), GtPoint(2.5, 2.5, 1), 1, ExtractConfig())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pca_area_not_below_minarea(seed):
    rng = np.random.default_rng(seed)
    m = rng.uniform(size=(15, 15)) < rng.uniform(0.1, 0.8)
    if m.sum() < 2:
        return
    pts = np.argwhere(m)[:, ::-1] + 0.5
    anchor = pts[rng.integers(len(pts))]
    assert min_area_rect(pts).area <= pca_minmax_rect(pts, anchor).area * (1 + 1e-9)


# -- end to end ------------------------------------------------------------

def rect_map(h, w, rects):
    ch = np.zeros((h, w))
    for r0, r1, c0, c1 in rects:
        ch[r0:r1, c0:c1] = 1.0
    return ch


def test_single_rectangle_recovered_within_one_pixel():
    ch = rect_map(40, 50, [(10, 22, 8, 38)])
    for strategy in (PCA_MINMAX, MINAREA_RECT):
        cfg = ExtractConfig(score_threshold=0.5, strategy_table={1: strategy})
        (b,) = sspbe(sem(ch), [GtPoint(23.0, 16.0, 1)], cfg).boxes
        c, s = math.cos(b.theta), math.sin(b.theta)
        assert abs(s) < 1e-9 or abs(c) < 1e-9
        w, h = (b.w, b.h) if abs(s) < 1e-9 else (b.h, b.w)
        x0, x1, y0, y1 = b.cx - w / 2, b.cx + w / 2, b.cy - h / 2, b.cy + h / 2
        assert abs(x0 - 8) <= 1 and abs(x1 - 38) <= 1
        assert abs(y0 - 10) <= 1 and abs(y1 - 22) <= 1


def test_two_adjacent_same_class_rectangles():
    # equal touching rectangles, so the partition bisector is their shared edge
    ch = rect_map(50, 70, [(10, 40, 6, 30), (10, 40, 30, 54)])
    truth = [RotatedBox(18, 25, 24, 30, 0), RotatedBox(42, 25, 24, 30, 0)]
    out = sspbe(sem(ch), [GtPoint(18, 25, 1), GtPoint(42, 25, 1)],
                ExtractConfig(strategy_table={1: MINAREA_RECT}))
    assert len(out) == 2
    for b, t in zip(out.boxes, truth):
        assert rotated_iou(b, t) >= 0.9


def test_full_gate_gives_fallbacks():
    # smooth bump whose single maximum cell is away from both annotations
    yy, xx = np.mgrid[0:30, 0:30]
    ch = np.exp(-((xx - 15) ** 2 + (yy - 15) ** 2) / 50.0)
    gts = [GtPoint(10.5, 10.5, 1), GtPoint(20.5, 20.5, 1)]
    out = sspbe(sem(ch), gts, ExtractConfig(score_threshold=1.0, tau_plus=3.0))
    assert out.degenerate == [True, True]
    assert out.boxes == [RotatedBox(10.5, 10.5, 6, 6, 0), RotatedBox(20.5, 20.5, 6, 6, 0)]


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_extraction_invariants_on_scenes(seed):
    (cfg,) = suite_configs(1, seed, "moderate", point_offset_fraction=0.2)
    scene = generate_scene(cfg)
    ecfg = ExtractConfig(strategy_table=strategy_table_for(scene))
    res = sspbe_detailed(scene.semantic, scene.gt_points, ecfg)
    labels = res.labels
    assert len(labels) == len(scene.gt_points)
    assert labels.instance_index == list(range(len(labels)))
    assert labels.classes == [g.class_id for g in scene.gt_points]
    pts = np.array([[g.x, g.y] for g in scene.gt_points])
    for k, (g, b, m) in enumerate(zip(scene.gt_points, labels.boxes, res.masks)):
        if labels.degenerate[k]:
            continue
        norm = normalize_class_map(scene.semantic, g.class_id)
        seeds = partition_seeds_for_class(scene.gt_points, g.class_id, ecfg)
        part = spatial_partition(scene.image.width, scene.image.height, pts[seeds])
        own = seeds[part.owner] == k
        assert not (m.mask & ~(own & (norm >= ecfg.score_threshold))).any()
        assert points_in_box(m.centers(), b, 1e-9).all()
        if ecfg.strategy(g.class_id) == PCA_MINMAX:
            assert (b.cx, b.cy) == (g.x, g.y)


def test_class_decoupling():
    (cfg,) = suite_configs(1, 7, "moderate")
    scene = generate_scene(cfg)
    base = sspbe_detailed(scene.semantic, scene.gt_points)
    scores = scene.semantic.scores.copy()
    scores[1] = np.random.default_rng(0).uniform(size=scores[1].shape)
    other = sspbe_detailed(SemanticMap(scores), scene.gt_points)
    for g, a, b in zip(scene.gt_points, base.masks, other.masks):
        if g.class_id != 2:
            np.testing.assert_array_equal(a.mask, b.mask)
