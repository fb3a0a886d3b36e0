#!/usr/bin/env python3
"""Pseudo-box mIoU when annotation points are displaced from object centres.

Offsets are uniform in the box frame, up to the given fraction of each half
side, and are redrawn until the point lands on its object. The object
layout is identical across fractions.
"""
import argparse

from ssplabel.experiments import SUITE_SEED, SUITE_SIZE, offset_robustness


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fractions", default="0,0.1,0.2,0.3")
    ap.add_argument("--scenes", type=int, default=SUITE_SIZE)
    ap.add_argument("--seed", type=int, default=SUITE_SEED)
    ap.add_argument("--difficulty", default="moderate", choices=("clean", "moderate"))
    args = ap.parse_args()
    fractions = [float(x) for x in args.fractions.split(",")]
    res = offset_robustness(fractions, args.scenes, args.seed, args.difficulty)
    base = res[fractions[0]]
    for f, m in res.items():
        print(f"offset {f:>4.0%}  mIoU {m:.4f}  ({m - base:+.4f})")


if __name__ == "__main__":
    main()
