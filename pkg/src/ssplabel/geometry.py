"""Rotated-box primitives.

Points are ``(N, 2)`` float arrays of ``(x, y)`` pixel coordinates and
polygons are ``(M, 2)`` arrays of counter-clockwise vertices. Angles are in
radians, measured from +x with counter-clockwise positive, and boxes keep
``theta`` in ``[-pi/2, pi/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMaskError, EmptyPointSetError

HALF_PI = math.pi / 2


def normalize_angle(theta: float) -> float:
    """Wrap an angle into ``[-pi/2, pi/2)``; a rectangle is unchanged by a half turn."""
    t = math.fmod(theta + HALF_PI, math.pi)
    if t < 0:
        t += math.pi
    t -= HALF_PI
    # fmod can land exactly on the open end after rounding
    if t >= HALF_PI:
        t -= math.pi
    return t


@dataclass(frozen=True)
class RotatedBox:
    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box parameters: {vals}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box size: w={self.w}, h={self.h}")
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit vectors along the width and height directions."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([c, s]), np.array([-s, c])

    def corners(self) -> np.ndarray:
        return box_corners(self)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h, self.theta)

    def translated(self, dx: float, dy: float) -> "RotatedBox":
        return RotatedBox(self.cx + dx, self.cy + dy, self.w, self.h, self.theta)


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise EmptyPointSetError("empty point set")
    pts = pts.reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise convex hull by Andrew's monotone chain.

    Collinear boundary points are dropped. Degenerate inputs return fewer
    than three vertices: one for coincident points, the two extremes for a
    collinear set.
    """
    pts = np.unique(as_points(points), axis=0)  # lexicographic sort by (x, y)
    if len(pts) <= 2:
        return pts
    p = [tuple(row) for row in pts.tolist()]

    lower: list[tuple[float, float]] = []
    for q in p:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    upper: list[tuple[float, float]] = []
    for q in reversed(p):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        # all points collinear: keep the two extremes
        return np.array([p[0], p[-1]])
    return np.array(hull)


def polygon_area(poly) -> float:
    """Signed shoelace area (positive for counter-clockwise)."""
    poly = np.asarray(poly, dtype=np.float64)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _box_from_frame(origin, u, lo_u, hi_u, lo_v, hi_v) -> RotatedBox:
    v = np.array([-u[1], u[0]])
    center = origin + u * (lo_u + hi_u) / 2 + v * (lo_v + hi_v) / 2
    theta = math.atan2(u[1], u[0])
    return RotatedBox(float(center[0]), float(center[1]), float(hi_u - lo_u), float(hi_v - lo_v), theta)


def min_area_rect(points) -> RotatedBox:
    """Minimum-area enclosing rectangle via rotating calipers over the hull.

    Collinear input yields a zero-height box along the segment; a single
    distinct point yields a zero-size box.
    """
    hull = convex_hull(points)
    m = len(hull)
    if m == 1:
        return RotatedBox(float(hull[0, 0]), float(hull[0, 1]), 0.0, 0.0, 0.0)
    if m == 2:
        d = hull[1] - hull[0]
        length = float(np.hypot(*d))
        return _box_from_frame(hull[0], d / length, 0.0, length, 0.0, 0.0)

    edges = np.roll(hull, -1, axis=0) - hull
    units = edges / np.hypot(edges[:, 0], edges[:, 1])[:, None]

    def proj_u(k, i):
        return float(np.dot(hull[k % m] - hull[i], units[i]))

    def proj_v(k, i):
        u = units[i]
        d = hull[k % m] - hull[i]
        return float(u[0] * d[1] - u[1] * d[0])

    # initial caliper positions for edge 0, then advance monotonically
    rel = hull - hull[0]
    pu0 = rel @ units[0]
    pv0 = units[0][0] * rel[:, 1] - units[0][1] * rel[:, 0]
    right = int(np.argmax(pu0))
    top = int(np.argmax(pv0))
    left = int(np.argmin(pu0))

    best = None
    for i in range(m):
        for _ in range(m):
            if proj_u(right + 1, i) >= proj_u(right, i):
                right += 1
            else:
                break
        for _ in range(m):
            if proj_v(top + 1, i) >= proj_v(top, i):
                top += 1
            else:
                break
        for _ in range(m):
            if proj_u(left + 1, i) <= proj_u(left, i):
                left += 1
            else:
                break
        hi_u, lo_u, hi_v = proj_u(right, i), proj_u(left, i), proj_v(top, i)
        area = (hi_u - lo_u) * hi_v
        if best is None or area < best[0]:
            best = (area, i, lo_u, hi_u, hi_v)

    _, i, lo_u, hi_u, hi_v = best
    return _box_from_frame(hull[i], units[i], lo_u, hi_u, 0.0, hi_v)


def principal_angle(points) -> float:
    """Angle of the first principal direction of an unweighted point set.

    For an isotropic covariance every direction is principal; the solver's
    two eigenvectors are then compared and the smaller normalized angle wins.
    """
    pts = as_points(points)
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)  # ascending
    scale = max(abs(evals[1]), np.finfo(float).tiny)
    if abs(evals[1] - evals[0]) <= 1e-10 * scale:
        return min(normalize_angle(math.atan2(evecs[1, k], evecs[0, k])) for k in (0, 1))
    return normalize_angle(math.atan2(evecs[1, 1], evecs[0, 1]))


def pca_minmax_rect(points, anchor=None) -> RotatedBox:
    """Box aligned with the principal axis and symmetric about ``anchor``.

    The orientation comes from the covariance about the point mean; the
    extents are measured about the anchor (the mean when ``anchor`` is None),
    taking twice the farthest projection on each axis so the box is centred
    on the anchor and still covers every point.
    """
    pts = as_points(points)
    if len(np.unique(pts, axis=0)) < 2:
        raise DegenerateMaskError("degenerate mask: fewer than 2 distinct points")
    theta = principal_angle(pts)
    center = pts.mean(axis=0) if anchor is None else np.asarray(anchor, dtype=np.float64).reshape(2)

    c, s = math.cos(theta), math.sin(theta)
    rel = pts - center
    pu = rel[:, 0] * c + rel[:, 1] * s
    pv = -rel[:, 0] * s + rel[:, 1] * c
    w = 2.0 * max(abs(pu.min()), abs(pu.max()))
    h = 2.0 * max(abs(pv.min()), abs(pv.max()))
    return RotatedBox(float(center[0]), float(center[1]), float(w), float(h), theta)


def box_corners(b: RotatedBox) -> np.ndarray:
    """Four counter-clockwise corners, starting at the (-w/2, -h/2) corner."""
    u, v = b.axes()
    hw, hh = b.w / 2, b.h / 2
    c = b.center
    return np.array([
        c - hw * u - hh * v,
        c + hw * u - hh * v,
        c + hw * u + hh * v,
        c - hw * u + hh * v,
    ])


def to_box_frame(points, b: RotatedBox) -> np.ndarray:
    """Coordinates of ``points`` along the box's width and height axes, relative to its centre."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2) - b.center
    u, v = b.axes()
    return np.stack([pts @ u, pts @ v], axis=1)


def distance_outside_box(points, b: RotatedBox) -> np.ndarray:
    """Euclidean distance from each point to the box (0 when inside or on it)."""
    local = np.abs(to_box_frame(points, b))
    over = np.maximum(local - np.array([b.w / 2, b.h / 2]), 0.0)
    return np.hypot(over[:, 0], over[:, 1])


def points_in_box(points, b: RotatedBox, tol: float = 0.0) -> np.ndarray:
    """Containment test; ``tol > 0`` grows the box by a distance, ``tol < 0`` insets each side."""
    if tol >= 0:
        return distance_outside_box(points, b) <= tol
    local = np.abs(to_box_frame(points, b))
    return (local[:, 0] <= b.w / 2 + tol) & (local[:, 1] <= b.h / 2 + tol)


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of one convex CCW polygon by another."""
    out = [tuple(p) for p in subject]
    n = len(clip)
    for k in range(n):
        if not out:
            break
        a, b = clip[k], clip[(k + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        inp, out = out, []
        prev = inp[-1]
        prev_side = ex * (prev[1] - a[1]) - ey * (prev[0] - a[0])
        for cur in inp:
            side = ex * (cur[1] - a[1]) - ey * (cur[0] - a[0])
            if side >= 0:
                if prev_side < 0:
                    t = prev_side / (prev_side - side)
                    out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
                out.append(cur)
            elif prev_side >= 0:
                t = prev_side / (prev_side - side)
                out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
            prev, prev_side = cur, side
    return np.array(out, dtype=np.float64).reshape(-1, 2)


def intersection_area(a: RotatedBox, b: RotatedBox) -> float:
    if a.area == 0 or b.area == 0:
        return 0.0
    return max(polygon_area(clip_convex(box_corners(a), box_corners(b))), 0.0)


def rotated_iou(a: RotatedBox, b: RotatedBox) -> float:
    """Exact IoU of two rotated boxes by convex polygon clipping."""
    # cheap reject on circumscribed circles
    ra = math.hypot(a.w, a.h) / 2
    rb = math.hypot(b.w, b.h) / 2
    if math.hypot(a.cx - b.cx, a.cy - b.cy) > ra + rb:
        return 0.0
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def boxes_overlap(a: RotatedBox, b: RotatedBox, margin: float = 0.0) -> bool:
    """Separating-axis test; ``margin`` inflates both boxes by that many pixels per side."""
    ca, cb = box_corners(_inflate(a, margin)), box_corners(_inflate(b, margin))
    for box in (a, b):
        for axis in box.axes():
            pa, pb = ca @ axis, cb @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True


def _inflate(b: RotatedBox, margin: float) -> RotatedBox:
    if margin == 0:
        return b
    return RotatedBox(b.cx, b.cy, b.w + 2 * margin, b.h + 2 * margin, b.theta)
