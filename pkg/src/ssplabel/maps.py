"""Grid data model and file formats.

Grids are indexed ``[row, col]``; cell ``(i, j)`` covers ``[j, j+1) x [i, i+1)``
in pixel coordinates, so its centre is ``(j + 0.5, i + 0.5)``. Annotation
points live in the same frame.

File formats
------------
* points JSON: ``[{"x": .., "y": .., "class": ..}, ...]``
* boxes JSON: ``[{"cx": .., "cy": .., "w": .., "h": .., "theta": .., "class": ..}, ...]``
* float container: ``b"SSPF"``, then little-endian u32 width, height,
  channels, then the f32 payload, channel-major then row-major.
* label container: the same header with a u32 payload. Background is
  ``0xFFFFFFFE`` and Ignore is ``0xFFFFFFFF``.
* gray images may also be 8-bit binary PGM (``P5``); ``P6`` colour files are
  reduced to luma on load.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ClassIdOutOfRangeError,
    DimensionMismatchError,
    MalformedFileError,
    NonFiniteScoreError,
)
from .geometry import RotatedBox

BACKGROUND = 0xFFFFFFFE
IGNORE = 0xFFFFFFFF
LABEL_DTYPE = np.uint32

MAGIC = b"SSPF"
_HEADER = struct.Struct("<4sIII")
LUMA = (0.299, 0.587, 0.114)


def cell_centers(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Broadcastable ``(xs, ys)`` of cell centres: shapes ``(1, W)`` and ``(H, 1)``."""
    xs = np.arange(width, dtype=np.float64)[None, :] + 0.5
    ys = np.arange(height, dtype=np.float64)[:, None] + 0.5
    return xs, ys


def point_to_cell(x: float, y: float, height: int, width: int) -> tuple[int, int] | None:
    """Row/col of the cell containing ``(x, y)``; the far image edge maps to the last cell."""
    if not (0 <= x <= width and 0 <= y <= height):
        return None
    return min(int(np.floor(y)), height - 1), min(int(np.floor(x)), width - 1)


@dataclass(frozen=True)
class GtPoint:
    x: float
    y: float
    class_id: int

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise MalformedFileError(f"non-finite point coordinates ({self.x}, {self.y})")
        if int(self.class_id) != self.class_id or self.class_id < 1:
            raise ClassIdOutOfRangeError(f"class id out of range: {self.class_id}")


def points_array(gts: Sequence[GtPoint]) -> np.ndarray:
    return np.array([[g.x, g.y] for g in gts], dtype=np.float64).reshape(-1, 2)


def classes_array(gts: Sequence[GtPoint]) -> np.ndarray:
    return np.array([g.class_id for g in gts], dtype=np.int64)


def check_points(gts: Sequence[GtPoint], height: int, width: int, num_classes: int | None = None) -> None:
    for k, g in enumerate(gts):
        if point_to_cell(g.x, g.y, height, width) is None:
            raise DimensionMismatchError(f"point {k} ({g.x}, {g.y}) outside {width}x{height} grid")
        if num_classes is not None and g.class_id > num_classes:
            raise ClassIdOutOfRangeError(f"class id out of range: point {k} has class {g.class_id} > {num_classes}")


@dataclass(frozen=True, eq=False)
class GrayImage:
    intensity: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.intensity, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionMismatchError(f"gray image must be 2-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFiniteScoreError("non-finite intensity")
        if a.size and (a.min() < 0 or a.max() > 1):
            raise MalformedFileError("intensity outside [0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "intensity", a)

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def width(self) -> int:
        return self.intensity.shape[1]


@dataclass(frozen=True, eq=False)
class SemanticMap:
    """Per-class scores of shape ``(channels, H, W)``; class ``c`` lives in channel ``c - 1``."""

    scores: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.scores, dtype=np.float64)
        if a.ndim != 3:
            raise DimensionMismatchError(f"semantic map must be (C, H, W), got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFiniteScoreError("non-finite score")
        if a.size and (a.min() < 0 or a.max() > 1):
            raise MalformedFileError("score outside [0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "scores", a)

    @property
    def channels(self) -> int:
        return self.scores.shape[0]

    @property
    def height(self) -> int:
        return self.scores.shape[1]

    @property
    def width(self) -> int:
        return self.scores.shape[2]

    def channel(self, class_id: int) -> np.ndarray:
        if not 1 <= class_id <= self.channels:
            raise ClassIdOutOfRangeError(f"class id out of range: {class_id} (map has {self.channels} channels)")
        return self.scores[class_id - 1]


@dataclass(frozen=True, eq=False)
class AssignmentMap:
    """Per-cell labels: a class id in ``[1, num_classes]``, BACKGROUND or IGNORE."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2:
            raise DimensionMismatchError(f"assignment map must be 2-D, got shape {a.shape}")
        a = a.astype(LABEL_DTYPE, copy=True)
        bad = (a != BACKGROUND) & (a != IGNORE) & ((a < 1) | (a > self.num_classes))
        if bad.any():
            raise ClassIdOutOfRangeError(f"class id out of range: {int(a[bad][0])}")
        a.setflags(write=False)
        object.__setattr__(self, "labels", a)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def positives(self) -> np.ndarray:
        return (self.labels != BACKGROUND) & (self.labels != IGNORE)

    def backgrounds(self) -> np.ndarray:
        return self.labels == BACKGROUND

    def ignores(self) -> np.ndarray:
        return self.labels == IGNORE

    def __eq__(self, other):
        if not isinstance(other, AssignmentMap):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True, eq=False)
class PartitionMap:
    """Owner seed index per cell."""

    owner: np.ndarray
    num_seeds: int

    def __post_init__(self):
        a = np.asarray(self.owner)
        if a.ndim != 2:
            raise DimensionMismatchError(f"partition map must be 2-D, got shape {a.shape}")
        a = a.astype(np.int64, copy=True)
        if a.size and (a.min() < 0 or a.max() >= self.num_seeds):
            raise MalformedFileError("owner index out of range")
        a.setflags(write=False)
        object.__setattr__(self, "owner", a)

    @property
    def height(self) -> int:
        return self.owner.shape[0]

    @property
    def width(self) -> int:
        return self.owner.shape[1]


@dataclass(eq=False)
class InstanceMask:
    """Cells owned by one instance, as a boolean grid."""

    instance_index: int
    mask: np.ndarray
    truncated: bool = False
    seed_cell: tuple[int, int] | None = field(default=None)

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.mask))

    def cells(self) -> np.ndarray:
        """``(N, 2)`` array of ``(row, col)`` indices."""
        return np.argwhere(self.mask)

    def centers(self) -> np.ndarray:
        rc = self.cells()
        return np.stack([rc[:, 1] + 0.5, rc[:, 0] + 0.5], axis=1).astype(np.float64)

    def corner_points(self) -> np.ndarray:
        """All four corners of every cell; same mean and principal axes as the centres."""
        rc = self.cells().astype(np.float64)
        x0, y0 = rc[:, 1], rc[:, 0]
        return np.concatenate([
            np.stack([x0, y0], axis=1),
            np.stack([x0 + 1, y0], axis=1),
            np.stack([x0 + 1, y0 + 1], axis=1),
            np.stack([x0, y0 + 1], axis=1),
        ])


def downsample(image: GrayImage, stride: int) -> GrayImage:
    """Block-mean reduction; trailing rows/cols that do not fill a block are dropped."""
    if stride == 1:
        return image
    h, w = image.height // stride, image.width // stride
    a = image.intensity[: h * stride, : w * stride]
    return GrayImage(a.reshape(h, stride, w, stride).mean(axis=(1, 3)))


def scale_points(gts: Sequence[GtPoint], stride: int) -> list[GtPoint]:
    return [GtPoint(g.x / stride, g.y / stride, g.class_id) for g in gts]


# -- IO ---------------------------------------------------------------------

def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise MalformedFileError(f"{path}: invalid JSON ({e})") from e


def load_points(path, num_classes: int | None = None) -> list[GtPoint]:
    data = _read_json(path)
    if not isinstance(data, list):
        raise MalformedFileError(f"{path}: expected a JSON list of points")
    out = []
    for k, rec in enumerate(data):
        try:
            x, y, c = float(rec["x"]), float(rec["y"]), rec["class"]
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedFileError(f"{path}: bad point record {k}: {rec!r}") from e
        if not isinstance(c, int) or isinstance(c, bool):
            raise MalformedFileError(f"{path}: class of point {k} must be an integer")
        if c < 1 or (num_classes is not None and c > num_classes):
            raise ClassIdOutOfRangeError(f"class id out of range: point {k} has class {c}")
        out.append(GtPoint(x, y, c))
    return out


def save_points(path, gts: Sequence[GtPoint]) -> None:
    atomic_write_text(path, dump_json([{"x": g.x, "y": g.y, "class": g.class_id} for g in gts]))


def boxes_to_records(boxes: Sequence[RotatedBox], classes: Sequence[int]) -> list[dict]:
    if len(boxes) != len(classes):
        raise DimensionMismatchError("boxes and classes differ in length")
    return [
        {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "theta": b.theta, "class": int(c)}
        for b, c in zip(boxes, classes)
    ]


def save_boxes(path, boxes: Sequence[RotatedBox], classes: Sequence[int]) -> None:
    atomic_write_text(path, dump_json(boxes_to_records(boxes, classes)))


def load_boxes(path) -> tuple[list[RotatedBox], list[int]]:
    data = _read_json(path)
    if not isinstance(data, list):
        raise MalformedFileError(f"{path}: expected a JSON list of boxes")
    boxes, classes = [], []
    for k, rec in enumerate(data):
        try:
            boxes.append(RotatedBox(*(float(rec[key]) for key in ("cx", "cy", "w", "h", "theta"))))
            c = rec["class"]
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedFileError(f"{path}: bad box record {k}: {rec!r}") from e
        if not isinstance(c, int) or c < 1:
            raise ClassIdOutOfRangeError(f"class id out of range: box {k} has class {c!r}")
        classes.append(c)
    return boxes, classes


def encode_container(array: np.ndarray) -> bytes:
    """Serialize a ``(C, H, W)`` or ``(H, W)`` float32/uint32 array."""
    a = np.asarray(array)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise DimensionMismatchError(f"container payload must be 2-D or 3-D, got {a.shape}")
    if a.dtype.kind == "f":
        payload = a.astype("<f4")
    elif a.dtype.kind in "ui":
        payload = a.astype("<u4")
    else:
        raise MalformedFileError(f"unsupported dtype {a.dtype}")
    c, h, w = payload.shape
    return _HEADER.pack(MAGIC, w, h, c) + np.ascontiguousarray(payload).tobytes()


def decode_container(data: bytes, dtype: str) -> np.ndarray:
    """Parse container bytes into a ``(C, H, W)`` array of ``dtype`` (``"<f4"`` or ``"<u4"``)."""
    if len(data) < _HEADER.size:
        raise MalformedFileError("truncated container header")
    magic, w, h, c = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedFileError(f"bad magic {magic!r}")
    expected = _HEADER.size + 4 * w * h * c
    if len(data) != expected:
        raise DimensionMismatchError(f"payload size {len(data) - _HEADER.size} does not match {w}x{h}x{c}")
    return np.frombuffer(data, dtype=dtype, offset=_HEADER.size).reshape(c, h, w)


def _read_bytes(path) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def save_semantic(path, m: SemanticMap) -> None:
    atomic_write_bytes(path, encode_container(m.scores.astype(np.float32)))


def load_semantic(path, num_classes: int | None = None) -> SemanticMap:
    a = decode_container(_read_bytes(path), "<f4").astype(np.float64)
    if not np.all(np.isfinite(a)):
        raise NonFiniteScoreError(f"{path}: non-finite score")
    if num_classes is not None and a.shape[0] != num_classes:
        raise DimensionMismatchError(f"{path}: {a.shape[0]} channels, expected {num_classes}")
    return SemanticMap(a)


def save_assignment(path, m: AssignmentMap) -> None:
    atomic_write_bytes(path, encode_container(m.labels))


def load_assignment(path, num_classes: int) -> AssignmentMap:
    a = decode_container(_read_bytes(path), "<u4")
    if a.shape[0] != 1:
        raise DimensionMismatchError(f"{path}: label container must have 1 channel, got {a.shape[0]}")
    return AssignmentMap(a[0], num_classes)


def save_partition(path, p: PartitionMap) -> None:
    atomic_write_bytes(path, encode_container(p.owner.astype(np.uint32)))


def load_partition(path, num_seeds: int) -> PartitionMap:
    a = decode_container(_read_bytes(path), "<u4")
    if a.shape[0] != 1:
        raise DimensionMismatchError(f"{path}: label container must have 1 channel, got {a.shape[0]}")
    return PartitionMap(a[0].astype(np.int64), num_seeds)


def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated header integers, skipping ``#`` comments."""
    vals, pos, n = [], 2, len(data)
    while len(vals) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise MalformedFileError("malformed PNM header")
        vals.append(int(data[start:pos]))
    return vals, pos + 1  # single whitespace byte before raster


def encode_pgm(intensity: np.ndarray) -> bytes:
    a = np.clip(np.rint(np.asarray(intensity) * 255.0), 0, 255).astype(np.uint8)
    h, w = a.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + a.tobytes()


def save_gray(path, image: GrayImage) -> None:
    """PGM for ``.pgm`` paths (8-bit, lossy), float container otherwise."""
    if str(path).lower().endswith(".pgm"):
        atomic_write_bytes(path, encode_pgm(image.intensity))
    else:
        atomic_write_bytes(path, encode_container(image.intensity.astype(np.float32)))


def load_gray(path) -> GrayImage:
    data = _read_bytes(path)
    if data[:4] == MAGIC:
        a = decode_container(data, "<f4")
        if a.shape[0] == 3:
            return GrayImage(np.clip(np.tensordot(LUMA, a.astype(np.float64), axes=1), 0, 1))
        if a.shape[0] != 1:
            raise DimensionMismatchError(f"{path}: gray image container must have 1 or 3 channels")
        return GrayImage(a[0].astype(np.float64))
    kind = data[:2]
    if kind not in (b"P5", b"P6"):
        raise MalformedFileError(f"{path}: not a PGM/PPM or float container")
    (w, h, maxval), pos = _pgm_tokens(data, 3)
    if not 0 < maxval < 256:
        raise MalformedFileError(f"{path}: only 8-bit PNM supported")
    ch = 1 if kind == b"P5" else 3
    raster = data[pos:pos + w * h * ch]
    if len(raster) != w * h * ch:
        raise DimensionMismatchError(f"{path}: raster shorter than {w}x{h}")
    a = np.frombuffer(raster, dtype=np.uint8).reshape(h, w, ch).astype(np.float64) / maxval
    if ch == 3:
        return GrayImage(np.clip(a @ np.array(LUMA), 0, 1))
    return GrayImage(a[..., 0])
