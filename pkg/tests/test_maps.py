import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ssplabel.errors import (
    ClassIdOutOfRangeError,
    DimensionMismatchError,
    MalformedFileError,
    NonFiniteScoreError,
)
from ssplabel.geometry import RotatedBox
from ssplabel.maps import (
    BACKGROUND,
    IGNORE,
    AssignmentMap,
    GrayImage,
    GtPoint,
    PartitionMap,
    SemanticMap,
    cell_centers,
    decode_container,
    downsample,
    encode_container,
    encode_pgm,
    load_assignment,
    load_boxes,
    load_gray,
    load_partition,
    load_points,
    load_semantic,
    point_to_cell,
    save_assignment,
    save_boxes,
    save_gray,
    save_partition,
    save_points,
    save_semantic,
    scale_points,
)


def test_cell_centers():
    xs, ys = cell_centers(2, 3)
    assert xs.tolist() == [[0.5, 1.5, 2.5]]
    assert ys.tolist() == [[0.5], [1.5]]


@pytest.mark.parametrize("x,y,cell", [
    (0, 0, (0, 0)), (2.99, 1.5, (1, 2)), (3, 2, (1, 2)), (3.01, 1, None), (-0.1, 1, None),
])
def test_point_to_cell(x, y, cell):
    assert point_to_cell(x, y, 2, 3) == cell


def test_gt_point_class_zero():
    with pytest.raises(ClassIdOutOfRangeError, match="class id out of range"):
        GtPoint(1, 1, 0)


def test_sentinels_distinct_and_high():
    assert BACKGROUND == 0xFFFFFFFE and IGNORE == 0xFFFFFFFF


def test_assignment_rejects_unknown_label():
    with pytest.raises(ClassIdOutOfRangeError):
        AssignmentMap(np.array([[3]], dtype=np.uint32), 2)


def test_semantic_channel_indexing():
    s = SemanticMap(np.stack([np.zeros((2, 2)), np.ones((2, 2))]))
    assert s.channel(2).sum() == 4
    with pytest.raises(ClassIdOutOfRangeError):
        s.channel(3)


def test_gray_rejects_nan():
    with pytest.raises(NonFiniteScoreError):
        GrayImage(np.array([[np.nan]]))


# -- round trips -------------------------------------------------------------

labels_grid = arrays(np.uint32, st.tuples(st.integers(1, 9), st.integers(1, 9)),
                     elements=st.sampled_from([1, 2, 3, BACKGROUND, IGNORE]))


@settings(max_examples=30, deadline=None)
@given(labels_grid)
def test_assignment_round_trip(tmp_path_factory, labels):
    path = tmp_path_factory.mktemp("a") / "a.sspf"
    m = AssignmentMap(labels, 3)
    save_assignment(path, m)
    assert load_assignment(path, 3) == m


def test_partition_round_trip(tmp_path):
    p = PartitionMap(np.array([[0, 0, 1], [2, 1, 1]]), 3)
    save_partition(tmp_path / "p.sspf", p)
    assert np.array_equal(load_partition(tmp_path / "p.sspf", 3).owner, p.owner)


def test_semantic_round_trip_float32(tmp_path):
    a = np.random.default_rng(0).uniform(size=(3, 5, 7))
    save_semantic(tmp_path / "s.sspf", SemanticMap(a))
    back = load_semantic(tmp_path / "s.sspf", 3)
    np.testing.assert_array_equal(back.scores, a.astype(np.float32))


def test_semantic_nan_rejected(tmp_path):
    a = np.zeros((1, 2, 2), dtype=np.float32)
    a[0, 1, 1] = np.nan
    (tmp_path / "s.sspf").write_bytes(encode_container(a))
    with pytest.raises(NonFiniteScoreError, match="non-finite score"):
        load_semantic(tmp_path / "s.sspf")


def test_semantic_channel_mismatch(tmp_path):
    save_semantic(tmp_path / "s.sspf", SemanticMap(np.zeros((2, 3, 3))))
    with pytest.raises(DimensionMismatchError):
        load_semantic(tmp_path / "s.sspf", 4)


def test_container_header_layout():
    data = encode_container(np.zeros((2, 3), dtype=np.uint32))
    assert struct.unpack_from("<4sIII", data) == (b"SSPF", 3, 2, 1)
    assert len(data) == 16 + 4 * 6


@pytest.mark.parametrize("data,err", [
    (b"SSP", MalformedFileError),
    (b"XXXX" + bytes(12), MalformedFileError),
    (struct.pack("<4sIII", b"SSPF", 2, 2, 1) + bytes(8), DimensionMismatchError),
])
def test_container_corrupt(data, err):
    with pytest.raises(err):
        decode_container(data, "<u4")


def test_points_round_trip(tmp_path):
    pts = [GtPoint(1.5, 2.25, 1), GtPoint(0.0, 9.0, 3)]
    save_points(tmp_path / "p.json", pts)
    assert load_points(tmp_path / "p.json", 3) == pts


def test_points_class_zero_file(tmp_path):
    (tmp_path / "p.json").write_text(json.dumps([{"x": 1, "y": 1, "class": 0}]))
    with pytest.raises(ClassIdOutOfRangeError, match="class id out of range"):
        load_points(tmp_path / "p.json")


@pytest.mark.parametrize("text", ["{", "{}", '[{"x": 1}]', '[{"x": 1, "y": 2, "class": 1.5}]'])
def test_points_malformed(tmp_path, text):
    (tmp_path / "p.json").write_text(text)
    with pytest.raises(MalformedFileError):
        load_points(tmp_path / "p.json")


def test_boxes_round_trip(tmp_path):
    boxes = [RotatedBox(1, 2, 3, 4, 0.5), RotatedBox(0, 0, 1, 1, -1.0)]
    save_boxes(tmp_path / "b.json", boxes, [2, 1])
    back, cls = load_boxes(tmp_path / "b.json")
    assert back == boxes and cls == [2, 1]


def test_gray_pgm_round_trip(tmp_path):
    a = np.arange(12).reshape(3, 4) / 11.0
    save_gray(tmp_path / "g.pgm", GrayImage(a))
    back = load_gray(tmp_path / "g.pgm").intensity
    assert np.abs(back - a).max() <= 0.5 / 255 + 1e-12


def test_gray_container_round_trip(tmp_path):
    a = np.random.default_rng(1).uniform(size=(4, 6))
    save_gray(tmp_path / "g.sspf", GrayImage(a))
    np.testing.assert_array_equal(load_gray(tmp_path / "g.sspf").intensity, a.astype(np.float32))


def test_pgm_with_comment(tmp_path):
    (tmp_path / "c.pgm").write_bytes(b"P5\n# note\n2 1\n255\n" + bytes([0, 255]))
    assert load_gray(tmp_path / "c.pgm").intensity.tolist() == [[0.0, 1.0]]


def test_ppm_luma(tmp_path):
    (tmp_path / "c.ppm").write_bytes(b"P6\n1 1\n255\n" + bytes([255, 0, 0]))
    assert load_gray(tmp_path / "c.ppm").intensity[0, 0] == pytest.approx(0.299)


def test_pgm_truncated(tmp_path):
    (tmp_path / "t.pgm").write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(DimensionMismatchError):
        load_gray(tmp_path / "t.pgm")


def test_encode_pgm_header():
    assert encode_pgm(np.ones((1, 2))) == b"P5\n2 1\n255\n\xff\xff"


def test_downsample_block_mean_and_points():
    img = GrayImage(np.array([[0, 1, 0.5, 0.5], [1, 0, 0.5, 0.5]], dtype=float))
    assert downsample(img, 2).intensity.tolist() == [[0.5, 0.5]]
    assert scale_points([GtPoint(4, 2, 1)], 2) == [GtPoint(2, 1, 1)]


def test_atomic_write_leaves_no_temp(tmp_path):
    save_points(tmp_path / "sub" / "p.json", [GtPoint(1, 1, 1)])
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["p.json"]
