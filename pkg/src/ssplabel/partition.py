"""Nearest-seed grid partitioning and constrained seeded region growing.

Both the raw-image assignment and the semantic-map extraction run on these
kernels: partition the grid among annotation points, then grow each point
into a mask that never leaves its own partition cell.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ConfigError, SeedOutOfBoundsError
from .geometry import as_points
from .maps import GrayImage, InstanceMask, PartitionMap, cell_centers, point_to_cell

_OFFSETS = {
    4: ((-1, 0), (0, -1), (0, 1), (1, 0)),
    8: ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)),
}


@dataclass(frozen=True)
class GrowConfig:
    """Admission rule for region growing.

    A neighbouring cell joins the region when ``|value - reference| <= tolerance``,
    where the reference is the seed cell's value (``"seed_value"``, order
    independent) or the current region mean (``"running_mean"``, depends on
    the fixed BFS visit order).
    """

    tolerance: float = 0.15
    connectivity: int = 4
    reference: str = "seed_value"
    max_area: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.tolerance) or self.tolerance < 0:
            raise ConfigError(f"tolerance must be finite and >= 0, got {self.tolerance}")
        if self.connectivity not in (4, 8):
            raise ConfigError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.reference not in ("seed_value", "running_mean"):
            raise ConfigError(f"unknown reference mode {self.reference!r}")
        if self.max_area is not None and self.max_area < 1:
            raise ConfigError("max_area must be positive")


def nearest_seed(width: int, height: int, seeds) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell index of the nearest seed and the squared distance to it.

    Ties go to the lowest seed index: a later seed replaces the running
    best only when strictly closer.
    """
    pts = as_points(seeds)
    xs, ys = cell_centers(height, width)
    best = np.full((height, width), np.inf)
    owner = np.zeros((height, width), dtype=np.int64)
    for k, (sx, sy) in enumerate(pts):
        d2 = (xs - sx) ** 2 + (ys - sy) ** 2
        closer = d2 < best
        best[closer] = d2[closer]
        owner[closer] = k
    return owner, best


def spatial_partition(width: int, height: int, seeds) -> PartitionMap:
    """Assign every cell to its nearest seed (Euclidean, cell centres)."""
    pts = as_points(seeds)
    for k, (x, y) in enumerate(pts):
        if point_to_cell(x, y, height, width) is None:
            raise SeedOutOfBoundsError(f"seed {k} ({x}, {y}) outside {width}x{height} grid")
    owner, _ = nearest_seed(width, height, pts)
    return PartitionMap(owner, len(pts))


def partition_boundaries(p: PartitionMap) -> np.ndarray:
    """Cells with at least one 4-neighbour owned by a different seed."""
    o = p.owner
    b = np.zeros(o.shape, dtype=bool)
    dv = o[1:, :] != o[:-1, :]
    dh = o[:, 1:] != o[:, :-1]
    b[1:, :] |= dv
    b[:-1, :] |= dv
    b[:, 1:] |= dh
    b[:, :-1] |= dh
    return b


def _seed_cells(seeds, height: int, width: int) -> list[tuple[int, int]]:
    cells = []
    for k, (x, y) in enumerate(np.asarray(seeds, dtype=np.float64).reshape(-1, 2)):
        cell = point_to_cell(x, y, height, width)
        if cell is None:
            raise SeedOutOfBoundsError(f"seed {k} ({x}, {y}) outside {width}x{height} grid")
        cells.append(cell)
    return cells


def _bfs(values, region, seed, cfg: GrowConfig, tolerance_ref: float | None) -> tuple[np.ndarray, bool]:
    """Breadth-first flood in a fixed neighbour order. Returns the mask and a truncation flag."""
    h, w = region.shape
    mask = np.zeros_like(region)
    offsets = _OFFSETS[cfg.connectivity]
    limit = cfg.max_area
    mask[seed] = True
    total, count = float(values[seed]), 1
    queue = deque([seed])
    while queue:
        i, j = queue.popleft()
        for di, dj in offsets:
            a, b = i + di, j + dj
            if not (0 <= a < h and 0 <= b < w) or mask[a, b] or not region[a, b]:
                continue
            ref = tolerance_ref if tolerance_ref is not None else total / count
            if abs(values[a, b] - ref) > cfg.tolerance:
                continue
            if limit is not None and count >= limit:
                return mask, True
            mask[a, b] = True
            total += float(values[a, b])
            count += 1
            queue.append((a, b))
    return mask, False


def region_grow(
    values,
    seeds,
    allowed: np.ndarray | None = None,
    cfg: GrowConfig = GrowConfig(),
    owner: np.ndarray | None = None,
    owner_ids: Sequence[int] | None = None,
    instance_ids: Sequence[int] | None = None,
) -> list[InstanceMask]:
    """Grow one mask per seed over ``allowed`` cells.

    When ``owner`` is given, seed ``k`` is further confined to cells with
    ``owner == owner_ids[k]`` (``owner_ids`` defaults to ``0..K-1``), which
    keeps masks of different seeds disjoint. A seed whose own cell is not
    allowed gets a singleton mask.
    """
    v = values.intensity if isinstance(values, GrayImage) else np.asarray(values, dtype=np.float64)
    h, w = v.shape
    cells = _seed_cells(seeds, h, w)
    if allowed is None:
        allowed = np.ones((h, w), dtype=bool)
    allowed = np.asarray(allowed, dtype=bool)
    if allowed.shape != v.shape:
        raise ValueError(f"allowed shape {allowed.shape} != values shape {v.shape}")
    if owner_ids is None:
        owner_ids = range(len(cells))
    if instance_ids is None:
        instance_ids = range(len(cells))

    slices = None
    if owner is not None:
        owner = np.asarray(owner)
        slices = ndimage.find_objects(owner + 1)
    structure = ndimage.generate_binary_structure(2, 1 if cfg.connectivity == 4 else 2)

    out = []
    for k, (cell, oid, iid) in enumerate(zip(cells, owner_ids, instance_ids)):
        if owner is not None:
            sl = slices[oid] if oid < len(slices) and slices[oid] is not None else (slice(0, 0), slice(0, 0))
        else:
            sl = (slice(0, h), slice(0, w))
        r0, c0 = sl[0].start, sl[1].start
        local_seed = (cell[0] - r0, cell[1] - c0)
        region = allowed[sl]
        if owner is not None:
            region = region & (owner[sl] == oid)
        full = np.zeros((h, w), dtype=bool)
        inside = 0 <= local_seed[0] < region.shape[0] and 0 <= local_seed[1] < region.shape[1]
        if not inside or not region[local_seed]:
            full[cell] = True
            out.append(InstanceMask(iid, full, False, cell))
            continue

        vals = v[sl]
        truncated = False
        if cfg.reference == "seed_value":
            admissible = region & (np.abs(vals - vals[local_seed]) <= cfg.tolerance)
            labels, _ = ndimage.label(admissible, structure=structure)
            local = labels == labels[local_seed]
            if cfg.max_area is not None and np.count_nonzero(local) > cfg.max_area:
                local, truncated = _bfs(vals, admissible, local_seed, cfg, float(vals[local_seed]))
        else:
            local, truncated = _bfs(vals, region, local_seed, cfg, None)
        full[sl] = local
        out.append(InstanceMask(iid, full, truncated, cell))
    return out
