"""Overlay rendering of masks and boxes onto a grayscale canvas."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .geometry import RotatedBox, box_corners
from .maps import InstanceMask


def draw_polygon(canvas: np.ndarray, poly: np.ndarray, value: float = 1.0) -> None:
    """Stroke the closed polygon outline in place, sampling each edge at sub-pixel steps."""
    h, w = canvas.shape
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        steps = max(2, int(np.ceil(2 * np.hypot(*(b - a)))) + 1)
        t = np.linspace(0.0, 1.0, steps)[:, None]
        pts = a + t * (b - a)
        cols = np.floor(pts[:, 0]).astype(int)
        rows = np.floor(pts[:, 1]).astype(int)
        ok = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        canvas[rows[ok], cols[ok]] = value


def render_overlay(
    base: np.ndarray,
    boxes: Sequence[RotatedBox],
    masks: Sequence[InstanceMask | None] = (),
    mask_value: float = 0.75,
    box_value: float = 1.0,
) -> np.ndarray:
    """Dim the base, tint mask cells, then draw box outlines on top."""
    canvas = 0.5 * np.clip(np.asarray(base, dtype=np.float64), 0, 1)
    for m in masks:
        if m is not None:
            canvas[m.mask] = mask_value
    for b in boxes:
        draw_polygon(canvas, box_corners(b), box_value)
    return canvas
