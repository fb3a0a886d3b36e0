"""Command-line entry point.

Sub-commands: synth, assign, extract, eval, pipeline, sweep. Settings come
from an optional JSON config file (``--config``) and are overridden by
flags. Every command writes a manifest recording inputs (with SHA-256),
the effective config, library versions and the seed. Failures exit with
status 2 and print one line: ``error: <category>: <message>``.

``SSPLABEL_THREADS`` sets the worker count for multi-scene commands.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import itertools
import json
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .assignment import AssignConfig, pspsa
from .config import (
    assign_from_dict,
    assign_to_dict,
    extract_from_dict,
    extract_to_dict,
    load_config_file,
    scene_from_dict,
)
from .errors import ConfigError, FormatError, SSPError
from .evaluation import assignment_quality, mean_report, strict_match_miou
from .experiments import DIFFICULTY, STANDARD_CLASSES, parallel_map, run_scene, strategy_table_for, suite_configs
from .extraction import PseudoLabelSet, dota_preset, sspbe_detailed
from .maps import (
    atomic_write_bytes,
    atomic_write_text,
    downsample,
    dump_json,
    encode_pgm,
    load_assignment,
    load_boxes,
    load_gray,
    load_points,
    load_semantic,
    save_assignment,
    save_boxes,
    scale_points,
)
from .render import render_overlay
from .synth import SceneConfig, generate_scene, load_scene, save_scene, scene_oracle_assignment


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    return {"ssplabel": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _manifest(command: str, inputs: dict, config: dict, outputs: dict, seed=None) -> dict:
    return {
        "command": command,
        "inputs": {k: {"path": str(p), "sha256": _sha256(p)} for k, p in inputs.items() if p is not None},
        "config": config,
        "outputs": outputs,
        "seed": seed,
        "versions": _versions(),
    }


def _write_manifest(path, manifest: dict) -> None:
    atomic_write_text(path, dump_json(manifest))


def _file_config(args) -> dict:
    return load_config_file(args.config) if getattr(args, "config", None) else {}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from e


# -- config assembly (file first, flags win) ---------------------------------

def _assign_config(args, file_cfg: dict) -> AssignConfig:
    cfg = assign_from_dict(file_cfg.get("assign", {}))
    grow = {}
    if args.tolerance is not None:
        grow["tolerance"] = args.tolerance
    if args.connectivity is not None:
        grow["connectivity"] = args.connectivity
    over = {}
    if grow:
        over["grow"] = {**dataclasses.asdict(cfg.grow), **grow}
    if args.tau_plus is not None:
        over["tau_plus"] = args.tau_plus
    if args.no_growing:
        over["use_growing_positives"] = False
    if args.no_boundary:
        over["use_boundary_negatives"] = False
    if args.no_radius_negatives:
        over["use_radius_negatives"] = False
    return assign_from_dict(over, cfg)


def _parse_strategy_table(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            k, v = item.split("=")
            out[int(k)] = {"pca": "pca_minmax", "minarea": "minarea_rect"}.get(v.strip(), v.strip())
        except ValueError as e:
            raise ConfigError(f"bad strategy entry {item!r}; expected CLASS=pca|minarea") from e
    return out


def _parse_pairs(text: str) -> list:
    pairs = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            a, b = item.split(":")
            pairs.append([int(a), int(b)])
        except ValueError as e:
            raise ConfigError(f"bad incompatible pair {item!r}; expected A:B") from e
    return pairs


def _extract_config(args, file_cfg: dict):
    base = extract_from_dict(file_cfg.get("extract", {}))
    over = {}
    if getattr(args, "preset", None) == "dota":
        p = dota_preset()
        over["incompatible_pairs"] = [sorted(x) for x in p["incompatible_pairs"]]
        over["strategy_table"] = p["strategy_table"]
    if args.score_threshold is not None:
        over["score_threshold"] = args.score_threshold
    if args.extract_tolerance is not None:
        over["grow"] = {**dataclasses.asdict(base.grow), "tolerance": args.extract_tolerance}
    if args.strategy:
        over["strategy_table"] = _parse_strategy_table(args.strategy)
    if args.incompatible:
        over["incompatible_pairs"] = _parse_pairs(args.incompatible)
    if args.fallback_tau_plus is not None:
        over["tau_plus"] = args.fallback_tau_plus
    return extract_from_dict(over, base)


def _scene_config(args, file_cfg: dict) -> SceneConfig:
    base = dict(width=128, height=128, classes=STANDARD_CLASSES, rng_seed=0)
    base.update(DIFFICULTY[args.difficulty])
    cfg = scene_from_dict(file_cfg.get("scene", {}), SceneConfig(**base))
    over = {}
    for flag, key in (("seed", "rng_seed"), ("offset", "point_offset_fraction"), ("blur", "semantic_blur"),
                      ("semantic_noise", "semantic_noise"), ("noise", "noise_sigma"), ("clutter", "clutter"),
                      ("width", "width"), ("height", "height")):
        val = getattr(args, flag, None)
        if val is not None:
            over[key] = val
    return dataclasses.replace(cfg, **over) if over else cfg


# -- commands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = _scene_config(args, _file_config(args))
    scene = generate_scene(cfg)
    out = Path(args.out)
    files = save_scene(out, scene)
    _write_manifest(out / "manifest.json", _manifest("synth", {}, {"scene": cfg.to_dict()}, files, cfg.rng_seed))
    print(f"wrote scene with {len(scene.gt_boxes)} instances to {out}")
    return 0


def cmd_assign(args) -> int:
    file_cfg = _file_config(args)
    cfg = _assign_config(args, file_cfg)
    image = load_gray(args.image)
    gts = load_points(args.points, args.num_classes)
    if args.stride > 1:
        image, gts = downsample(image, args.stride), scale_points(gts, args.stride)
    amap = pspsa(image, gts, cfg, args.num_classes)
    save_assignment(args.out, amap)
    config = {"assign": assign_to_dict(cfg), "stride": args.stride, "num_classes": amap.num_classes}
    _write_manifest(f"{args.out}.manifest.json",
                    _manifest("assign", {"image": args.image, "points": args.points}, config, {"assignment": str(args.out)}))
    n = amap.labels.size
    print(f"positive {amap.positives().sum() / n:.3f}  background {amap.backgrounds().sum() / n:.3f}  "
          f"ignore {amap.ignores().sum() / n:.3f}")
    return 0


def cmd_extract(args) -> int:
    file_cfg = _file_config(args)
    cfg = _extract_config(args, file_cfg)
    sem = load_semantic(args.semantic, args.num_classes)
    gts = load_points(args.points, sem.channels)
    result = sspbe_detailed(sem, gts, cfg)
    labels = result.labels
    save_boxes(args.out, labels.boxes, labels.classes)
    outputs = {"boxes": str(args.out)}
    if args.overlay:
        canvas = render_overlay(sem.scores.max(axis=0), labels.boxes, result.masks)
        atomic_write_bytes(args.overlay, encode_pgm(canvas))
        outputs["overlay"] = str(args.overlay)
    _write_manifest(f"{args.out}.manifest.json",
                    _manifest("extract", {"semantic": args.semantic, "points": args.points},
                              {"extract": extract_to_dict(cfg)}, outputs))
    print(f"{len(labels)} boxes ({sum(labels.degenerate)} degenerate fallbacks)")
    return 0


def cmd_eval(args) -> int:
    pred_boxes, pred_classes = load_boxes(args.pred)
    gt_boxes, _ = load_boxes(args.gt)
    if len(pred_boxes) != len(gt_boxes):
        raise FormatError(f"strict match needs one prediction per ground truth: {len(pred_boxes)} vs {len(gt_boxes)}")
    pred = PseudoLabelSet(pred_boxes, pred_classes, list(range(len(pred_boxes))))
    report = strict_match_miou(pred, gt_boxes)
    inputs = {"pred": args.pred, "gt": args.gt}
    if args.assignment or args.oracle:
        if not (args.assignment and args.oracle and args.num_classes):
            raise ConfigError("--assignment needs --oracle and --num-classes")
        report.assignment = assignment_quality(load_assignment(args.assignment, args.num_classes),
                                               load_assignment(args.oracle, args.num_classes))
        inputs.update(assignment=args.assignment, oracle=args.oracle)
    print(report.table())
    if args.out:
        atomic_write_text(args.out, dump_json(report.to_dict()))
        _write_manifest(f"{args.out}.manifest.json", _manifest("eval", inputs, {}, {"report": str(args.out)}))
    return 0


def cmd_pipeline(args) -> int:
    file_cfg = _file_config(args)
    out = Path(args.out)
    if args.scene:
        scene = load_scene(args.scene)
        scene_cfg = scene.config
    else:
        scene_cfg = _scene_config(args, file_cfg)
        scene = generate_scene(scene_cfg)
    assign_cfg = _assign_config(args, file_cfg)
    extract_cfg = _extract_config(args, file_cfg)
    if not extract_cfg.strategy_table and scene.strategy_tags:
        extract_cfg = dataclasses.replace(extract_cfg, strategy_table=strategy_table_for(scene))

    files = {f"scene/{k}": f"scene/{v}" for k, v in save_scene(out / "scene", scene).items()}
    amap = pspsa(scene.image, scene.gt_points, assign_cfg, scene.num_classes)
    oracle = scene_oracle_assignment(scene)
    save_assignment(out / "assignment.sspf", amap)
    save_assignment(out / "oracle_assignment.sspf", oracle)
    result = sspbe_detailed(scene.semantic, scene.gt_points, extract_cfg)
    save_boxes(out / "boxes.json", result.labels.boxes, result.labels.classes)
    report = strict_match_miou(result.labels, scene.gt_boxes)
    report.assignment = assignment_quality(amap, oracle)
    atomic_write_text(out / "report.json", dump_json(report.to_dict()))
    files.update({"assignment": "assignment.sspf", "oracle_assignment": "oracle_assignment.sspf",
                  "boxes": "boxes.json", "report": "report.json"})
    if args.overlay:
        canvas = render_overlay(scene.semantic.scores.max(axis=0), result.labels.boxes, result.masks)
        atomic_write_bytes(out / "overlay.pgm", encode_pgm(canvas))
        files["overlay"] = "overlay.pgm"

    config = {
        "scene": scene_cfg.to_dict() if scene_cfg else None,
        "assign": assign_to_dict(assign_cfg),
        "extract": extract_to_dict(extract_cfg),
    }
    seed = scene_cfg.rng_seed if scene_cfg else None
    scene_inputs = {"scene": Path(args.scene) / "scene.json"} if args.scene else {}
    manifest = _manifest("pipeline", scene_inputs, config, files, seed)
    # record inputs relative to the run so reruns elsewhere compare byte-identical
    manifest["inputs"] = {k: {"path": Path(v["path"]).name, "sha256": v["sha256"]} for k, v in manifest["inputs"].items()}
    manifest["output_sha256"] = {k: _sha256(out / v) for k, v in sorted(files.items())}
    _write_manifest(out / "manifest.json", manifest)
    print(report.table())
    return 0


SWEEP_METRICS = ("miou", "recall@0.5", "recall@0.75", "degenerate", "instances", "assign_mean_fg_iou",
                 "assign_pixel_accuracy")


def cmd_sweep(args) -> int:
    file_cfg = _file_config(args)
    assign_cfg = _assign_config(args, file_cfg)
    base_extract = _extract_config(args, file_cfg)
    tolerances = _floats(args.tolerances) if args.tolerances else [base_extract.grow.tolerance]
    thresholds = _floats(args.thresholds) if args.thresholds else [base_extract.score_threshold]
    offsets = _floats(args.offsets) if args.offsets else [0.0]
    scene_base = _scene_config(args, file_cfg)

    rows = []
    for tol, thr, off in itertools.product(tolerances, thresholds, offsets):
        extract_cfg = dataclasses.replace(
            base_extract, score_threshold=thr, grow=dataclasses.replace(base_extract.grow, tolerance=tol))
        configs = suite_configs(args.scenes, args.suite_seed, args.difficulty, classes=scene_base.classes,
                                point_offset_fraction=off, clutter=scene_base.clutter,
                                width=scene_base.width, height=scene_base.height)
        reports = parallel_map(lambda c: run_scene(generate_scene(c), extract_cfg, assign_cfg), configs)
        agg = mean_report(reports)
        row = {"extract_tolerance": tol, "score_threshold": thr, "point_offset_fraction": off,
               "scenes": args.scenes, "suite_seed": args.suite_seed, "difficulty": args.difficulty,
               "assign_tolerance": assign_cfg.grow.tolerance, "tau_plus": assign_cfg.tau_plus}
        row.update({k: agg.get(k) for k in SWEEP_METRICS})
        rows.append(row)
        print(", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()), flush=True)

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    atomic_write_text(args.out, buf.getvalue())
    config = {"assign": assign_to_dict(assign_cfg), "extract": extract_to_dict(base_extract),
              "grid": {"tolerances": tolerances, "thresholds": thresholds, "offsets": offsets},
              "scenes": args.scenes, "difficulty": args.difficulty}
    _write_manifest(f"{args.out}.manifest.json", _manifest("sweep", {}, config, {"csv": str(args.out)}, args.suite_seed))
    return 0


# -- parser -------------------------------------------------------------------

def _add_assign_flags(p):
    g = p.add_argument_group("assignment")
    g.add_argument("--tau-plus", type=float, help="fixed positive radius in map pixels (default 3)")
    g.add_argument("--tolerance", type=float, help="raw-image growing tolerance (default 0.15)")
    g.add_argument("--connectivity", type=int, choices=(4, 8))
    g.add_argument("--no-growing", action="store_true", help="disable grown-region positives")
    g.add_argument("--no-boundary", action="store_true", help="disable partition-boundary negatives")
    g.add_argument("--no-radius-negatives", action="store_true",
                   help="label every non-positive cell background (centre-sampling baseline)")


def _add_extract_flags(p):
    g = p.add_argument_group("extraction")
    g.add_argument("--score-threshold", type=float, help="score gate on normalized maps (default 0.5)")
    g.add_argument("--extract-tolerance", type=float, help="semantic growing tolerance (default 0.5)")
    g.add_argument("--strategy", help="per-class box rule, e.g. '1=pca,2=minarea'")
    g.add_argument("--incompatible", help="nested class pairs, e.g. '13:7,4:11'")
    g.add_argument("--preset", choices=("dota",), help="DOTA-v1.0 nested pairs and item/field table")
    g.add_argument("--fallback-tau-plus", type=float, help="half side of the fallback box (default 3)")


def _add_scene_flags(p):
    g = p.add_argument_group("scene")
    g.add_argument("--seed", type=int)
    g.add_argument("--difficulty", choices=tuple(DIFFICULTY), default="moderate")
    g.add_argument("--offset", type=float, help="annotation offset fraction")
    g.add_argument("--blur", type=float, help="semantic blur sigma (pixels)")
    g.add_argument("--semantic-noise", type=float)
    g.add_argument("--noise", type=float, help="image noise sigma")
    g.add_argument("--clutter", type=int, help="number of unannotated clutter patches")
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssplabel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config")
    _add_scene_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("assign", help="dense assignment map from an image and points")
    p.add_argument("--image", required=True, help="PGM/PPM or float container")
    p.add_argument("--points", required=True)
    p.add_argument("--out", required=True, help="label container path")
    p.add_argument("--num-classes", type=int)
    p.add_argument("--stride", type=int, default=1, help="block-mean downsampling factor")
    p.add_argument("--config")
    _add_assign_flags(p)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("extract", help="pseudo-boxes from a semantic map and points")
    p.add_argument("--semantic", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out", required=True, help="boxes JSON path")
    p.add_argument("--num-classes", type=int, help="expected channel count")
    p.add_argument("--overlay", help="write a PGM overlay of masks and boxes")
    p.add_argument("--config")
    _add_extract_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="strict-match mIoU of predicted boxes")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--assignment", help="predicted assignment map")
    p.add_argument("--oracle", help="oracle assignment map")
    p.add_argument("--num-classes", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="scene -> assignment -> extraction -> report")
    p.add_argument("--out", required=True)
    p.add_argument("--scene", help="existing scene directory instead of synthesizing")
    p.add_argument("--overlay", action="store_true")
    p.add_argument("--config")
    _add_scene_flags(p)
    _add_assign_flags(p)
    _add_extract_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep", help="grid over tolerance, score gate and offset on a scene suite")
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--tolerances", help="comma-separated semantic growing tolerances")
    p.add_argument("--thresholds", help="comma-separated score gates")
    p.add_argument("--offsets", help="comma-separated annotation offset fractions")
    p.add_argument("--scenes", type=int, default=10)
    p.add_argument("--suite-seed", type=int, default=20240611)
    p.add_argument("--config")
    _add_scene_flags(p)
    _add_assign_flags(p)
    _add_extract_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SSPError as e:
        msg, cat = str(e), e.category
    except (OSError, json.JSONDecodeError) as e:
        msg, cat = str(e), "io" if isinstance(e, OSError) else "format"
    except (KeyError, TypeError, ValueError) as e:
        msg, cat = str(e), "config"
    print(f"error: {cat}: {' '.join(msg.split())}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
