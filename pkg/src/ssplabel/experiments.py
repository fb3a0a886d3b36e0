"""Synthetic benchmark suites and the ablation runners built on them."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .assignment import AssignConfig, pspsa
from .evaluation import EvalReport, assignment_quality, mean_report, strict_match_miou
from .extraction import MINAREA_RECT, PCA_MINMAX, TAG_STRATEGY, ExtractConfig, sspbe
from .synth import ClassSpec, Scene, SceneConfig, generate_scene, scene_oracle_assignment

SUITE_SEED = 20240611
SUITE_SIZE = 50

STANDARD_CLASSES = (
    ClassSpec("vehicle", 6, 0.55, "item", "rect", length=(10, 16), aspect=(0.35, 0.55)),
    ClassSpec("ship", 4, 0.85, "item", "rect", length=(18, 30), aspect=(0.2, 0.35)),
    ClassSpec("court", 3, 0.7, "field", "rect", length=(16, 26), aspect=(0.55, 0.95)),
    ClassSpec("plane", 3, 0.95, "item", "cross", length=(20, 30), aspect=(0.7, 0.9), thickness=0.2),
)

DIFFICULTY = {
    "clean": dict(noise_sigma=0.0, semantic_blur=0.0, semantic_noise=0.0),
    "moderate": dict(noise_sigma=0.05, semantic_blur=2.0, semantic_noise=0.05),
}

ABLATION_ROWS = {
    "pos-radius": dict(use_radius_negatives=False, use_growing_positives=False, use_boundary_negatives=False),
    "+neg-radius": dict(use_radius_negatives=True, use_growing_positives=False, use_boundary_negatives=False),
    "+pos-growing": dict(use_radius_negatives=True, use_growing_positives=True, use_boundary_negatives=False),
    "+neg-partition": dict(use_radius_negatives=True, use_growing_positives=True, use_boundary_negatives=True),
}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("SSPLABEL_THREADS", "1")))
    except ValueError:
        return 1


def suite_configs(
    n: int = SUITE_SIZE,
    seed: int = SUITE_SEED,
    difficulty: str = "moderate",
    classes: Sequence[ClassSpec] = STANDARD_CLASSES,
    **overrides,
) -> list[SceneConfig]:
    """``n`` scene configs with per-scene seeds derived from ``seed``."""
    base = dict(width=128, height=128, classes=tuple(classes), rng_seed=0)
    base.update(DIFFICULTY[difficulty])
    base.update(overrides)
    seeds = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)
    return [SceneConfig(**{**base, "rng_seed": int(s)}) for s in seeds]


def strategy_table_for(scene_or_cfg, mode: str = "hybrid") -> dict[int, str]:
    cfg = scene_or_cfg.config if isinstance(scene_or_cfg, Scene) else scene_or_cfg
    if mode == "hybrid":
        return {k + 1: TAG_STRATEGY[c.kind] for k, c in enumerate(cfg.classes)}
    strategy = {"pca": PCA_MINMAX, "minarea": MINAREA_RECT}[mode]
    return {k + 1: strategy for k in range(len(cfg.classes))}


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map over a thread pool sized by ``SSPLABEL_THREADS``."""
    threads = thread_count()
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class SceneResult:
    report: EvalReport
    scene: Scene = field(repr=False)


def run_scene(scene: Scene, extract: ExtractConfig | None = None, assign: AssignConfig | None = None,
              strategy_mode: str = "hybrid") -> EvalReport:
    """Extraction on the oracle semantic map, plus assignment quality when ``assign`` is given."""
    if extract is None:
        extract = ExtractConfig()
    if not extract.strategy_table:
        extract = replace(extract, strategy_table=strategy_table_for(scene, strategy_mode))
    report = strict_match_miou(sspbe(scene.semantic, scene.gt_points, extract), scene.gt_boxes)
    if assign is not None:
        amap = pspsa(scene.image, scene.gt_points, assign, scene.num_classes)
        report.assignment = assignment_quality(amap, scene_oracle_assignment(scene))
    return report


def suite_miou(configs: Sequence[SceneConfig], extract: ExtractConfig | None = None,
               strategy_mode: str = "hybrid") -> dict:
    reports = parallel_map(lambda c: run_scene(generate_scene(c), extract, None, strategy_mode), configs)
    return mean_report(reports)


def ablation_assignment(configs: Sequence[SceneConfig], grow_tolerance: float | None = None,
                        tau_plus: float = 3.0) -> dict[str, dict[str, float]]:
    """Scene-averaged assignment quality for each cumulative ablation row.

    Each row maps to ``{"mean_fg_iou": ..., "pixel_accuracy": ...}``.
    """
    scenes = parallel_map(generate_scene, configs)
    oracles = [scene_oracle_assignment(s) for s in scenes]
    out = {}
    for name, flags in ABLATION_ROWS.items():
        cfg = AssignConfig(tau_plus=tau_plus, **flags)
        if grow_tolerance is not None:
            cfg = replace(cfg, grow=replace(cfg.grow, tolerance=grow_tolerance))
        quals = parallel_map(
            lambda so: assignment_quality(pspsa(so[0].image, so[0].gt_points, cfg, so[0].num_classes), so[1]),
            list(zip(scenes, oracles)),
        )
        out[name] = {
            "mean_fg_iou": float(np.mean([q.mean_fg_iou for q in quals])),
            "pixel_accuracy": float(np.mean([q.pixel_accuracy for q in quals])),
        }
    return out


def offset_robustness(fractions: Sequence[float] = (0.0, 0.1, 0.3), n: int = SUITE_SIZE,
                      seed: int = SUITE_SEED, difficulty: str = "moderate",
                      extract: ExtractConfig | None = None) -> dict[float, float]:
    """Pseudo-label mIoU with annotations jittered by a fraction of the object size."""
    return {
        f: suite_miou(suite_configs(n, seed, difficulty, point_offset_fraction=f), extract)["miou"]
        for f in fractions
    }


def hybrid_comparison(n: int = SUITE_SIZE, seed: int = SUITE_SEED, difficulty: str = "moderate",
                      extract: ExtractConfig | None = None) -> dict[str, float]:
    configs = suite_configs(n, seed, difficulty)
    return {mode: suite_miou(configs, extract, mode)["miou"] for mode in ("pca", "minarea", "hybrid")}
