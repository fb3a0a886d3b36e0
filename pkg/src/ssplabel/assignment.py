"""Dense training targets from point annotations.

Step one labels cells by distance to the nearest annotation: positive inside
a fixed radius, background beyond the distance to that annotation's nearest
neighbour, ignored in between. Step two only touches the ignored cells:
those inside a plausibly-sized grown region become positive, those on a
partition boundary become background.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .maps import (
    BACKGROUND,
    IGNORE,
    LABEL_DTYPE,
    AssignmentMap,
    GrayImage,
    GtPoint,
    InstanceMask,
    PartitionMap,
    check_points,
    classes_array,
    points_array,
)
from .partition import GrowConfig, nearest_seed, partition_boundaries, region_grow, spatial_partition


@dataclass(frozen=True)
class AssignConfig:
    tau_plus: float = 3.0
    grow: GrowConfig = field(default_factory=GrowConfig)
    area_outlier_low: float = 0.25
    area_outlier_high: float = 4.0
    # ablation switches; all on is the full method
    use_radius_negatives: bool = True
    use_growing_positives: bool = True
    use_boundary_negatives: bool = True

    def __post_init__(self):
        if not self.tau_plus >= 0:
            raise ConfigError(f"tau_plus must be >= 0, got {self.tau_plus}")
        if not self.area_outlier_low < 1 < self.area_outlier_high:
            raise ConfigError("need area_outlier_low < 1 < area_outlier_high")


def radius_table(points) -> np.ndarray:
    """Distance from each annotation to its nearest other annotation (inf when alone)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 2:
        return np.full(len(pts), np.inf)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def num_classes_of(gts: Sequence[GtPoint], num_classes: int | None) -> int:
    top = max((g.class_id for g in gts), default=1)
    return top if num_classes is None else num_classes


def dynamic_radius_assign(
    width: int,
    height: int,
    gts: Sequence[GtPoint],
    tau_plus: float,
    num_classes: int | None = None,
    radius_negatives: bool = True,
) -> AssignmentMap:
    """Positive within ``tau_plus`` of the nearest annotation, background beyond its neighbour distance.

    Both comparisons are strict, so a cell exactly on either radius is
    ignored. With ``radius_negatives=False`` every non-positive cell is
    background (the plain centre-sampling baseline).
    """
    if not gts:
        raise ValueError("dynamic radius assignment needs at least one annotation")
    ncls = num_classes_of(gts, num_classes)
    check_points(gts, height, width, ncls)
    pts, cls = points_array(gts), classes_array(gts)
    owner, d2 = nearest_seed(width, height, pts)
    d = np.sqrt(d2)
    upper = radius_table(pts)[owner]

    labels = np.full((height, width), IGNORE, dtype=LABEL_DTYPE)
    if radius_negatives:
        labels[d > upper] = BACKGROUND
    else:
        labels[:] = BACKGROUND
    pos = d < tau_plus
    labels[pos] = cls[owner[pos]]
    return AssignmentMap(labels, ncls)


def validate_regions(
    masks: Sequence[InstanceMask],
    classes: Sequence[int],
    low: float = 0.25,
    high: float = 4.0,
) -> list[bool]:
    """Flag area outliers against the per-class median area.

    Classes with fewer than three instances in the image are never flagged.
    """
    areas = np.array([m.area for m in masks], dtype=np.float64)
    classes = np.asarray(classes)
    valid = np.ones(len(masks), dtype=bool)
    for c in np.unique(classes):
        idx = np.flatnonzero(classes == c)
        if len(idx) < 3:
            continue
        med = np.median(areas[idx])
        valid[idx] = (areas[idx] >= low * med) & (areas[idx] <= high * med)
    return valid.tolist()


@dataclass
class AssignResult:
    """Final map plus the intermediates that produced it."""

    assignment: AssignmentMap
    radius_step: AssignmentMap
    partition: PartitionMap | None = None
    boundary: np.ndarray | None = None
    masks: list[InstanceMask] | None = None
    valid: list[bool] | None = None


def pspsa_detailed(image: GrayImage, gts: Sequence[GtPoint], cfg: AssignConfig = AssignConfig(),
                   num_classes: int | None = None) -> AssignResult:
    h, w = image.height, image.width
    step1 = dynamic_radius_assign(w, h, gts, cfg.tau_plus, num_classes, cfg.use_radius_negatives)
    if not (cfg.use_growing_positives or cfg.use_boundary_negatives):
        return AssignResult(step1, step1)

    pts, cls = points_array(gts), classes_array(gts)
    part = spatial_partition(w, h, pts)
    boundary = partition_boundaries(part)
    labels = step1.labels.copy()
    ign = labels == IGNORE
    upgraded = np.zeros_like(ign)

    masks = valid = None
    if cfg.use_growing_positives:
        # boundary cells stay out of growth when they are meant to be negatives
        allowed = ~boundary if cfg.use_boundary_negatives else None
        masks = region_grow(image, pts, allowed, cfg.grow, owner=part.owner)
        valid = validate_regions(masks, cls, cfg.area_outlier_low, cfg.area_outlier_high)
        for k, (m, ok) in enumerate(zip(masks, valid)):
            if not ok:
                continue
            hit = ign & m.mask
            labels[hit] = cls[k]
            upgraded |= hit
    if cfg.use_boundary_negatives:
        labels[ign & ~upgraded & boundary] = BACKGROUND

    return AssignResult(AssignmentMap(labels, step1.num_classes), step1, part, boundary, masks, valid)


def pspsa(image: GrayImage, gts: Sequence[GtPoint], cfg: AssignConfig = AssignConfig(),
          num_classes: int | None = None) -> AssignmentMap:
    """Pixel spatial-partitioning sample assignment on a single-channel image."""
    return pspsa_detailed(image, gts, cfg, num_classes).assignment
