"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports library algorithms; only plain numpy.
"""
from collections import deque

import numpy as np


def brute_hull(points):
    """O(n^3) hull: an ordered pair (a, b) is a hull edge when every point lies left of or on a->b.

    Returns the set of strict hull vertices (collinear edge-interior points excluded).
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    n = len(pts)
    if n <= 2:
        return {tuple(p) for p in pts}
    verts = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = pts[i], pts[j]
            cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
            if np.all(cross >= 0):
                # keep only the extreme endpoints of collinear runs
                on = cross == 0
                d = (pts[on] - a) @ (b - a)
                line = pts[on]
                verts.add(tuple(line[np.argmin(d)]))
                verts.add(tuple(line[np.argmax(d)]))
    return verts


def sweep_min_area(points, step_deg=0.1):
    """Smallest axis-aligned extent area over rotations in [0, 90) degrees."""
    pts = np.asarray(points, dtype=float)
    angles = np.deg2rad(np.arange(0.0, 90.0, step_deg))
    c, s = np.cos(angles), np.sin(angles)
    u = np.outer(c, pts[:, 0]) + np.outer(s, pts[:, 1])
    v = np.outer(-s, pts[:, 0]) + np.outer(c, pts[:, 1])
    areas = (u.max(1) - u.min(1)) * (v.max(1) - v.min(1))
    return float(areas.min())


def inside_box(xy, box):
    cx, cy, w, h, t = box
    dx, dy = xy[:, 0] - cx, xy[:, 1] - cy
    u = dx * np.cos(t) + dy * np.sin(t)
    v = -dx * np.sin(t) + dy * np.cos(t)
    return (np.abs(u) <= w / 2) & (np.abs(v) <= h / 2)


def monte_carlo_iou(a, b, n=1_000_000, rng=None):
    """Sample the bounding rectangle of both boxes' circumcircles."""
    rng = np.random.default_rng(0) if rng is None else rng
    ra = 0.5 * np.hypot(a[2], a[3])
    rb = 0.5 * np.hypot(b[2], b[3])
    x0 = min(a[0] - ra, b[0] - rb)
    x1 = max(a[0] + ra, b[0] + rb)
    y0 = min(a[1] - ra, b[1] - rb)
    y1 = max(a[1] + ra, b[1] + rb)
    xy = rng.uniform((x0, y0), (x1, y1), size=(n, 2))
    ia, ib = inside_box(xy, a), inside_box(xy, b)
    union = np.count_nonzero(ia | ib)
    return np.count_nonzero(ia & ib) / union if union else 0.0


def brute_partition(width, height, seeds):
    """Per-cell scan over seeds in index order, first strict minimum wins."""
    owner = np.zeros((height, width), dtype=np.int64)
    for i in range(height):
        for j in range(width):
            cx, cy = j + 0.5, i + 0.5
            best, arg = None, 0
            for k, (sx, sy) in enumerate(seeds):
                d = (cx - sx) ** 2 + (cy - sy) ** 2
                if best is None or d < best:
                    best, arg = d, k
            owner[i, j] = arg
    return owner


def brute_boundary(owner):
    h, w = owner.shape
    out = np.zeros((h, w), dtype=bool)
    for i in range(h):
        for j in range(w):
            for a, b in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                if 0 <= a < h and 0 <= b < w and owner[a, b] != owner[i, j]:
                    out[i, j] = True
    return out


def bfs_grow(values, seed_cell, allowed, tolerance, connectivity=4):
    """Seed-value flood fill written as an explicit queue."""
    h, w = values.shape
    if not allowed[seed_cell]:
        out = np.zeros((h, w), dtype=bool)
        out[seed_cell] = True
        return out
    ref = values[seed_cell]
    seen = np.zeros((h, w), dtype=bool)
    seen[seed_cell] = True
    q = deque([seed_cell])
    if connectivity == 4:
        nbrs = ((1, 0), (-1, 0), (0, 1), (0, -1))
    else:
        nbrs = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    while q:
        i, j = q.popleft()
        for di, dj in nbrs:
            a, b = i + di, j + dj
            if 0 <= a < h and 0 <= b < w and not seen[a, b] and allowed[a, b] \
                    and abs(values[a, b] - ref) <= tolerance:
                seen[a, b] = True
                q.append((a, b))
    return seen


BG, IGN = 0xFFFFFFFE, 0xFFFFFFFF


def radius_rule_cell(cx, cy, pts, classes, tau_plus):
    """Label of one cell from the nearest-annotation radius rule, evaluated directly."""
    d = [np.hypot(cx - x, cy - y) for x, y in pts]
    jbar = int(np.argmin(d))
    dbar = d[jbar]
    others = [np.hypot(pts[jbar][0] - x, pts[jbar][1] - y) for k, (x, y) in enumerate(pts) if k != jbar]
    tau_minus = min(others) if others else np.inf
    if dbar < tau_plus:
        return classes[jbar]
    if dbar > tau_minus:
        return BG
    return IGN
