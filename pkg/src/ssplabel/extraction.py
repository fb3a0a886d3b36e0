"""Oriented pseudo-boxes from a semantic map and point annotations.

Each class is handled on its own normalized channel. The grid is
partitioned among the class's points and those of compatible classes, cells
scoring below the gate are removed, and every point is grown into a mask
inside its own partition cell. Masks become boxes through either the
anchored PCA rule (compact "item" objects) or the minimum-area rectangle
("field" objects).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateMaskError
from .geometry import RotatedBox, as_points, min_area_rect, pca_minmax_rect
from .maps import (
    GtPoint,
    InstanceMask,
    SemanticMap,
    check_points,
    classes_array,
    points_array,
)
from .partition import GrowConfig, region_grow, spatial_partition

PCA_MINMAX = "pca_minmax"
MINAREA_RECT = "minarea_rect"
STRATEGIES = (PCA_MINMAX, MINAREA_RECT)
TAG_STRATEGY = {"item": PCA_MINMAX, "field": MINAREA_RECT}

NORM_EPS = 1e-6

DOTA_CLASSES = (
    "plane", "baseball-diamond", "bridge", "ground-track-field", "small-vehicle",
    "large-vehicle", "ship", "tennis-court", "basketball-court", "storage-tank",
    "soccer-ball-field", "roundabout", "harbor", "swimming-pool", "helicopter",
)
_DOTA_ITEMS = {"plane", "small-vehicle", "large-vehicle", "ship", "storage-tank", "swimming-pool", "helicopter"}


def _pair(a: int, b: int) -> frozenset:
    return frozenset((int(a), int(b)))


def dota_preset() -> dict:
    """Class ids (1-based, DOTA-v1.0 order), nested pairs and item/field strategies."""
    ids = {name: k + 1 for k, name in enumerate(DOTA_CLASSES)}
    return {
        "class_ids": ids,
        "incompatible_pairs": frozenset({
            _pair(ids["harbor"], ids["ship"]),
            _pair(ids["ground-track-field"], ids["soccer-ball-field"]),
        }),
        "strategy_table": {
            ids[name]: PCA_MINMAX if name in _DOTA_ITEMS else MINAREA_RECT for name in DOTA_CLASSES
        },
    }


@dataclass(frozen=True)
class ExtractConfig:
    score_threshold: float = 0.5
    grow: GrowConfig = field(default_factory=lambda: GrowConfig(tolerance=0.5))
    incompatible_pairs: frozenset = frozenset()
    strategy_table: Mapping[int, str] = field(default_factory=dict)
    # used for classes missing from strategy_table, keeping the table total
    default_strategy: str = PCA_MINMAX
    tau_plus: float = 3.0

    def __post_init__(self):
        if not 0 <= self.score_threshold <= 1:
            raise ConfigError(f"score_threshold must be in [0, 1], got {self.score_threshold}")
        pairs = frozenset(_pair(*p) for p in self.incompatible_pairs)
        object.__setattr__(self, "incompatible_pairs", pairs)
        table = {int(k): v for k, v in dict(self.strategy_table).items()}
        for c, s in table.items():
            if s not in STRATEGIES:
                raise ConfigError(f"unknown box strategy {s!r} for class {c}")
        if self.default_strategy not in STRATEGIES:
            raise ConfigError(f"unknown box strategy {self.default_strategy!r}")
        object.__setattr__(self, "strategy_table", table)

    def strategy(self, class_id: int) -> str:
        return self.strategy_table.get(int(class_id), self.default_strategy)

    def compatible(self, a: int, b: int) -> bool:
        return a == b or _pair(a, b) not in self.incompatible_pairs


@dataclass
class PseudoLabelSet:
    """One box per annotation, in annotation order."""

    boxes: list[RotatedBox]
    classes: list[int]
    instance_index: list[int]
    degenerate: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.degenerate:
            self.degenerate = [False] * len(self.boxes)
        if not len(self.boxes) == len(self.classes) == len(self.instance_index) == len(self.degenerate):
            raise ValueError("pseudo-label fields differ in length")

    def __len__(self):
        return len(self.boxes)


def normalize_class_map(m: SemanticMap, c: int) -> np.ndarray:
    """Divide channel ``c`` by its maximum (floored at 1e-6) and clamp to [0, 1]."""
    ch = m.channel(c)
    return np.clip(ch / max(float(ch.max()), NORM_EPS), 0.0, 1.0)


def partition_seeds_for_class(gts: Sequence[GtPoint], c: int, cfg: ExtractConfig) -> np.ndarray:
    """Indices (ascending) of annotations that seed class ``c``'s partition."""
    return np.array([k for k, g in enumerate(gts) if cfg.compatible(c, g.class_id)], dtype=np.int64)


def fallback_box(gt: GtPoint, cfg: ExtractConfig) -> RotatedBox:
    side = 2.0 * cfg.tau_plus
    return RotatedBox(gt.x, gt.y, side, side, 0.0)


def mask_to_rbox_hybrid(mask, gt, c: int, cfg: ExtractConfig) -> RotatedBox:
    """Convert a mask (InstanceMask or point array) with the strategy assigned to class ``c``.

    An InstanceMask contributes its cell centres, unweighted. Only the PCA
    path is anchored on the annotation point.
    """
    if isinstance(mask, InstanceMask):
        if mask.area < 2:
            raise DegenerateMaskError(f"degenerate mask for instance {mask.instance_index}")
        pts = mask.centers()
    else:
        pts = as_points(mask)
        if len(np.unique(pts, axis=0)) < 2:
            raise DegenerateMaskError("degenerate mask: fewer than 2 distinct points")
    if cfg.strategy(c) == PCA_MINMAX:
        anchor = (gt.x, gt.y) if isinstance(gt, GtPoint) else gt
        return pca_minmax_rect(pts, anchor)
    return min_area_rect(pts)


@dataclass
class ExtractResult:
    labels: PseudoLabelSet
    masks: list[InstanceMask | None]


def sspbe_detailed(m: SemanticMap, gts: Sequence[GtPoint], cfg: ExtractConfig = ExtractConfig()) -> ExtractResult:
    h, w = m.height, m.width
    check_points(gts, h, w, m.channels)
    pts, cls = points_array(gts), classes_array(gts)
    k_total = len(gts)
    boxes: list[RotatedBox | None] = [None] * k_total
    degenerate = [False] * k_total
    masks: list[InstanceMask | None] = [None] * k_total

    for c in sorted(set(cls.tolist())):
        norm = normalize_class_map(m, c)
        seeds = partition_seeds_for_class(gts, c, cfg)
        part = spatial_partition(w, h, pts[seeds])
        gate = norm >= cfg.score_threshold
        mine = [pos for pos, k in enumerate(seeds) if cls[k] == c]
        grown = region_grow(
            norm, pts[seeds[mine]], gate, cfg.grow,
            owner=part.owner, owner_ids=mine, instance_ids=seeds[mine].tolist(),
        )
        for mk in grown:
            k = mk.instance_index
            masks[k] = mk
            try:
                boxes[k] = mask_to_rbox_hybrid(mk, gts[k], c, cfg)
            except DegenerateMaskError:
                boxes[k] = fallback_box(gts[k], cfg)
                degenerate[k] = True

    labels = PseudoLabelSet(boxes, cls.tolist(), list(range(k_total)), degenerate)
    return ExtractResult(labels, masks)


def sspbe(m: SemanticMap, gts: Sequence[GtPoint], cfg: ExtractConfig = ExtractConfig()) -> PseudoLabelSet:
    """Semantic spatial-partitioning box extraction: exactly one box per annotation."""
    return sspbe_detailed(m, gts, cfg).labels
