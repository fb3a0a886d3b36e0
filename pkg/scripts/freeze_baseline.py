#!/usr/bin/env python3
"""Measure the moderate-difficulty suite once and freeze the result.

Writes tests/frozen_baselines.json: the strict-match mIoU of the 50-scene
moderate suite (the non-regression reference), the suite seed that
generated it, and SHA-256 digests of two saved reference scenes used by
the determinism check. Refuses to overwrite an existing file unless
--force is given, since the acceptance suite compares against it.
"""
import argparse
import hashlib
import json
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

import ssplabel
from ssplabel.experiments import SUITE_SEED, SUITE_SIZE, suite_configs, suite_miou
from ssplabel.maps import dump_json
from ssplabel.synth import generate_scene, save_scene

OUT = Path(__file__).resolve().parent.parent / "tests" / "frozen_baselines.json"


def scene_digests(difficulty):
    cfg = suite_configs(1, SUITE_SEED, difficulty, point_offset_fraction=0.1)[0]
    with tempfile.TemporaryDirectory() as d:
        files = save_scene(d, generate_scene(cfg))
        return {name: hashlib.sha256((Path(d) / f).read_bytes()).hexdigest() for name, f in sorted(files.items())}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--force", action="store_true")
    args = ap.parse_args()
    if OUT.exists() and not args.force:
        sys.exit(f"{OUT} exists; pass --force to re-freeze")

    moderate = suite_miou(suite_configs(SUITE_SIZE, SUITE_SEED, "moderate"))
    data = {
        "suite_seed": SUITE_SEED,
        "suite_size": SUITE_SIZE,
        "moderate_miou": moderate["miou"],
        "moderate_tolerance": 0.02,
        "scene_sha256": {d: scene_digests(d) for d in ("clean", "moderate")},
        "measured_with": {"ssplabel": ssplabel.__version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }
    OUT.write_text(dump_json(data))
    print(f"moderate mIoU {moderate['miou']:.6f} over {moderate['instances']} instances -> {OUT}")


if __name__ == "__main__":
    main()
