#!/usr/bin/env python3
"""All-PCA vs all-minimum-area vs per-class hybrid box rules on the suite."""
import argparse

from ssplabel.experiments import SUITE_SEED, SUITE_SIZE, hybrid_comparison, strategy_table_for, suite_configs, suite_miou
from ssplabel.extraction import ExtractConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenes", type=int, default=SUITE_SIZE)
    ap.add_argument("--seed", type=int, default=SUITE_SEED)
    args = ap.parse_args()
    for difficulty in ("clean", "moderate"):
        res = hybrid_comparison(args.scenes, args.seed, difficulty)
        print(f"{difficulty:<9}" + "  ".join(f"{k} {v:.4f}" for k, v in res.items()))
    # per-class view on the moderate suite
    configs = suite_configs(args.scenes, args.seed, "moderate")
    names = [c.name for c in configs[0].classes]
    for mode in ("pca", "minarea", "hybrid"):
        table = strategy_table_for(configs[0], mode)
        agg = suite_miou(configs, ExtractConfig(strategy_table=table))
        print(f"{mode:<8} overall {agg['miou']:.4f}  recall@0.75 {agg['recall@0.75']:.4f}")
    print("classes:", ", ".join(f"{k + 1}={n}" for k, n in enumerate(names)))


if __name__ == "__main__":
    main()
