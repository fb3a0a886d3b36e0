"""Synthetic scenes with known answers.

A scene is a set of oriented objects on a noisy background, together with
its ground-truth boxes, annotation points, and an oracle semantic map
(blurred, noisy per-class masks) that stands in for a trained label marker.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence``; PCG64 and the Generator's uniform/normal samplers are
fixed algorithms, so a seed reproduces a scene bit for bit on any platform.
Independent child streams drive geometry, annotation offsets, image noise
and semantic noise, so changing e.g. the offset fraction leaves the object
layout untouched.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigError, InfeasibleSceneError, MalformedFileError
from .geometry import RotatedBox, boxes_overlap, points_in_box, to_box_frame
from .maps import (
    BACKGROUND,
    LABEL_DTYPE,
    AssignmentMap,
    GrayImage,
    GtPoint,
    SemanticMap,
    atomic_write_text,
    boxes_to_records,
    cell_centers,
    dump_json,
    load_boxes,
    load_gray,
    load_points,
    load_semantic,
    point_to_cell,
    save_boxes,
    save_gray,
    save_points,
    save_semantic,
)

SHAPES = ("rect", "cross")
KINDS = ("item", "field")


@dataclass(frozen=True)
class ClassSpec:
    """One object class. ``length`` is the long side; ``aspect`` = short / long."""

    name: str
    count: int
    intensity: float
    kind: str = "item"
    shape: str = "rect"
    length: tuple[float, float] = (12.0, 24.0)
    aspect: tuple[float, float] = (0.3, 0.6)
    # arm thickness of cross shapes, as a fraction of the long side
    thickness: float = 0.2
    nest_in: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"class {self.name}: kind must be one of {KINDS}")
        if self.shape not in SHAPES:
            raise ConfigError(f"class {self.name}: shape must be one of {SHAPES}")
        if self.count < 0:
            raise ConfigError(f"class {self.name}: negative count")
        if not (0 < self.length[0] <= self.length[1]) or not (0 < self.aspect[0] <= self.aspect[1] <= 1):
            raise ConfigError(f"class {self.name}: bad size ranges")
        if not 0 <= self.intensity <= 1:
            raise ConfigError(f"class {self.name}: intensity outside [0, 1]")


@dataclass(frozen=True)
class SceneConfig:
    width: int = 128
    height: int = 128
    classes: tuple[ClassSpec, ...] = ()
    min_separation: float = 6.0
    # minimum gap between object boxes, pixels
    gap: float = 2.0
    background: float = 0.2
    noise_sigma: float = 0.05
    semantic_blur: float = 0.0
    semantic_noise: float = 0.0
    point_offset_fraction: float = 0.0
    # unannotated background structures painted with object-like intensities
    clutter: int = 0
    clutter_size: tuple[float, float] = (6.0, 24.0)
    rng_seed: int = 0
    max_attempts: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(
            c if isinstance(c, ClassSpec) else ClassSpec(**c) for c in self.classes
        ))
        if self.min_separation <= 0:
            raise ConfigError("min_separation must be positive")
        if not 0 <= self.point_offset_fraction < 1:
            raise ConfigError("point_offset_fraction must be in [0, 1)")
        for c in self.classes:
            if abs(c.intensity - self.background) < 2 * self.noise_sigma:
                raise ConfigError(
                    f"class {c.name}: intensity {c.intensity} within 2 sigma of background {self.background}"
                )
            if c.nest_in is not None and not 1 <= c.nest_in <= len(self.classes):
                raise ConfigError(f"class {c.name}: nest_in refers to unknown class {c.nest_in}")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classes"] = [asdict(c) for c in self.classes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        d = dict(d)
        d["classes"] = tuple(
            ClassSpec(**{**c, "length": tuple(c["length"]), "aspect": tuple(c["aspect"])}) for c in d.get("classes", ())
        )
        if "clutter_size" in d:
            d["clutter_size"] = tuple(d["clutter_size"])
        return cls(**d)


@dataclass(eq=False)
class Scene:
    image: GrayImage
    gt_boxes: list[RotatedBox]
    gt_points: list[GtPoint]
    semantic: SemanticMap
    strategy_tags: dict[int, str]
    shapes: list[str] = field(default_factory=list)
    masks: list[np.ndarray] = field(default_factory=list)
    parents: list[int | None] = field(default_factory=list)
    config: SceneConfig | None = None

    @property
    def classes(self) -> list[int]:
        return [g.class_id for g in self.gt_points]

    @property
    def num_classes(self) -> int:
        return self.semantic.channels


def shape_mask(box: RotatedBox, shape: str, thickness: float, height: int, width: int) -> np.ndarray:
    """Cells whose centres fall inside the object; a cross is a bar along w plus a bar along h."""
    xs, ys = cell_centers(height, width)
    u, v = box.axes()
    dx, dy = xs - box.cx, ys - box.cy
    pu = dx * u[0] + dy * u[1]
    pv = dx * v[0] + dy * v[1]
    hw, hh = box.w / 2, box.h / 2
    if shape == "rect":
        return (np.abs(pu) <= hw) & (np.abs(pv) <= hh)
    bar = max(thickness * box.w, 2.0) / 2
    return ((np.abs(pu) <= hw) & (np.abs(pv) <= bar)) | ((np.abs(pu) <= bar) & (np.abs(pv) <= hh))


def _sample_box(rng, spec: ClassSpec, cfg: SceneConfig, region: RotatedBox | None) -> RotatedBox:
    length = rng.uniform(*spec.length)
    short = length * rng.uniform(*spec.aspect)
    theta = rng.uniform(-math.pi / 2, math.pi / 2)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    hx = (length * c + short * s) / 2
    hy = (length * s + short * c) / 2
    if region is None:
        lo_x, hi_x = hx + 1, cfg.width - hx - 1
        lo_y, hi_y = hy + 1, cfg.height - hy - 1
    else:
        r = math.hypot(region.w, region.h) / 2
        lo_x, hi_x = region.cx - r, region.cx + r
        lo_y, hi_y = region.cy - r, region.cy + r
    if lo_x >= hi_x or lo_y >= hi_y:
        # too large for the canvas; still consume the draws so the stream stays aligned
        rng.uniform(0, 1, size=2)
        return None
    return RotatedBox(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y), length, short, theta)


def _place(cfg: SceneConfig, rng) -> tuple[list[RotatedBox], list[int], list[int | None]]:
    boxes: list[RotatedBox] = []
    classes: list[int] = []
    parents: list[int | None] = []
    order = [k for k, c in enumerate(cfg.classes) if c.nest_in is None]
    order += [k for k, c in enumerate(cfg.classes) if c.nest_in is not None]
    for k in order:
        spec = cfg.classes[k]
        cid = k + 1
        for _ in range(spec.count):
            failures = 0
            while True:
                parent = None
                region = None
                if spec.nest_in is not None:
                    hosts = [i for i, c in enumerate(classes) if c == spec.nest_in]
                    if not hosts:
                        raise InfeasibleSceneError(f"class {spec.name!r}: no instances of host class {spec.nest_in}")
                    parent = hosts[int(rng.integers(len(hosts)))]
                    region = boxes[parent]
                cand = _sample_box(rng, spec, cfg, region)
                if cand is not None and _fits(cand, boxes, parents, parent, cfg):
                    break
                failures += 1
                if failures >= cfg.max_attempts:
                    raise InfeasibleSceneError(
                        f"class {spec.name!r}: could not place instance {classes.count(cid) + 1} "
                        f"after {cfg.max_attempts} attempts"
                    )
            boxes.append(cand)
            classes.append(cid)
            parents.append(parent)
    return boxes, classes, parents


def _fits(cand: RotatedBox, boxes, parents, parent, cfg: SceneConfig) -> bool:
    if parent is not None:
        # nested objects sit wholly inside the host, clear of the host's other guests
        if not points_in_box(cand.corners(), boxes[parent], tol=-cfg.gap).all():
            return False
        peers = [i for i, p in enumerate(parents) if p == parent]
    else:
        peers = [i for i, p in enumerate(parents) if p is None]
    for i in peers:
        other = boxes[i]
        if math.hypot(cand.cx - other.cx, cand.cy - other.cy) < cfg.min_separation:
            return False
        if boxes_overlap(cand, other, margin=cfg.gap / 2):
            return False
    return True


def _paint_clutter(image: np.ndarray, cfg: SceneConfig, rng) -> None:
    if cfg.clutter == 0 or not cfg.classes:
        return
    h, w = image.shape
    levels = [c.intensity for c in cfg.classes]
    for _ in range(cfg.clutter):
        a, b = rng.uniform(*cfg.clutter_size, size=2)
        box = RotatedBox(rng.uniform(0, w), rng.uniform(0, h), a, b, rng.uniform(-math.pi / 2, math.pi / 2))
        level = levels[int(rng.integers(len(levels)))] + rng.uniform(-0.03, 0.03)
        image[shape_mask(box, "rect", 0.0, h, w)] = level


def generate_scene(cfg: SceneConfig) -> Scene:
    """Render a scene deterministically from ``cfg.rng_seed``."""
    geo, off, img_rng, sem_rng, clutter_rng = (
        np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(cfg.rng_seed).spawn(5)
    )
    h, w = cfg.height, cfg.width
    boxes, classes, parents = _place(cfg, geo)
    specs = [cfg.classes[c - 1] for c in classes]
    masks = [shape_mask(b, s.shape, s.thickness, h, w) for b, s in zip(boxes, specs)]

    image = np.full((h, w), cfg.background)
    _paint_clutter(image, cfg, clutter_rng)
    # hosts first so nested objects paint over them
    for k in sorted(range(len(boxes)), key=lambda k: parents[k] is not None):
        image[masks[k]] = specs[k].intensity
    if cfg.noise_sigma > 0:
        image = image + img_rng.normal(0.0, cfg.noise_sigma, size=(h, w))
    image = np.clip(image, 0.0, 1.0)

    f = cfg.point_offset_fraction
    points = []
    for k, b in enumerate(boxes):
        u, v = b.axes()
        x, y = b.cx, b.cy
        for _ in range(100):
            a, bb = off.uniform(-1.0, 1.0, size=2)
            px = b.cx + a * f * b.w / 2 * u[0] + bb * f * b.h / 2 * v[0]
            py = b.cy + a * f * b.w / 2 * u[1] + bb * f * b.h / 2 * v[1]
            cell = point_to_cell(px, py, h, w)
            if f == 0 or (cell is not None and masks[k][cell]):
                x, y = px, py
                break
        points.append(GtPoint(float(x), float(y), classes[k]))

    sem = np.zeros((cfg.num_classes, h, w))
    for k, c in enumerate(classes):
        sem[c - 1][masks[k]] = 1.0
    for ch in range(cfg.num_classes):
        layer = sem[ch]
        if cfg.semantic_blur > 0:
            layer = ndimage.gaussian_filter(layer, cfg.semantic_blur, mode="constant")
        if cfg.semantic_noise > 0:
            layer = layer + sem_rng.normal(0.0, cfg.semantic_noise, size=(h, w))
        sem[ch] = np.clip(layer, 0.0, 1.0)

    tags = {k + 1: c.kind for k, c in enumerate(cfg.classes)}
    return Scene(GrayImage(image), boxes, points, SemanticMap(sem), tags,
                 [s.shape for s in specs], masks, parents, cfg)


def scene_oracle_assignment(scene: Scene) -> AssignmentMap:
    """True per-cell classes; where objects nest, the smaller one wins."""
    labels = np.full((scene.image.height, scene.image.width), BACKGROUND, dtype=LABEL_DTYPE)
    order = sorted(range(len(scene.gt_boxes)), key=lambda k: -scene.gt_boxes[k].area)
    for k in order:
        labels[scene.masks[k]] = scene.gt_points[k].class_id
    return AssignmentMap(labels, scene.num_classes)


def gt_points_inside_masks(scene: Scene) -> list[bool]:
    out = []
    for g, m in zip(scene.gt_points, scene.masks):
        cell = point_to_cell(g.x, g.y, *m.shape)
        out.append(cell is not None and bool(m[cell]))
    return out


def point_in_own_box(scene: Scene) -> list[bool]:
    return [bool(points_in_box([[g.x, g.y]], b, 1e-9)[0]) for g, b in zip(scene.gt_points, scene.gt_boxes)]


def scene_manifest(scene: Scene) -> dict:
    return {
        "boxes": boxes_to_records(scene.gt_boxes, scene.classes),
        "points": [{"x": g.x, "y": g.y, "class": g.class_id} for g in scene.gt_points],
        "shapes": scene.shapes,
        "parents": scene.parents,
        "strategy_tags": {str(k): v for k, v in scene.strategy_tags.items()},
        "config": scene.config.to_dict() if scene.config else None,
    }


def save_scene(directory, scene: Scene) -> dict:
    """Write image, semantic map, points, boxes and ``scene.json``; returns the file map."""
    d = Path(directory)
    files = {
        "image": "image.sspf",
        "image_preview": "image.pgm",
        "semantic": "semantic.sspf",
        "points": "points.json",
        "gt_boxes": "gt_boxes.json",
        "manifest": "scene.json",
    }
    save_gray(d / files["image"], scene.image)
    save_gray(d / files["image_preview"], scene.image)
    save_semantic(d / files["semantic"], scene.semantic)
    save_points(d / files["points"], scene.gt_points)
    save_boxes(d / files["gt_boxes"], scene.gt_boxes, scene.classes)
    atomic_write_text(d / files["manifest"], dump_json(scene_manifest(scene)))
    return files


def load_scene(directory) -> Scene:
    """Reload a saved scene; instance masks are re-rendered from the boxes."""
    d = Path(directory)
    try:
        manifest = json.loads((d / "scene.json").read_text())
    except json.JSONDecodeError as e:
        raise MalformedFileError(f"{d / 'scene.json'}: invalid JSON") from e
    cfg = SceneConfig.from_dict(manifest["config"]) if manifest.get("config") else None
    image = load_gray(d / "image.sspf")
    semantic = load_semantic(d / "semantic.sspf")
    points = load_points(d / "points.json", semantic.channels)
    boxes, _ = load_boxes(d / "gt_boxes.json")
    shapes = manifest.get("shapes", ["rect"] * len(boxes))
    thick = [cfg.classes[p.class_id - 1].thickness if cfg else 0.2 for p in points]
    masks = [shape_mask(b, s, t, image.height, image.width) for b, s, t in zip(boxes, shapes, thick)]
    tags = {int(k): v for k, v in manifest.get("strategy_tags", {}).items()}
    return Scene(image, boxes, points, semantic, tags, shapes, masks,
                 manifest.get("parents", [None] * len(boxes)), cfg)


def box_frame_offsets(scene: Scene) -> np.ndarray:
    """Annotation offsets in each box's frame, as fractions of the half sizes."""
    out = []
    for g, b in zip(scene.gt_points, scene.gt_boxes):
        local = to_box_frame([[g.x, g.y]], b)[0]
        out.append([local[0] / (b.w / 2), local[1] / (b.h / 2)])
    return np.array(out).reshape(-1, 2)
