#!/usr/bin/env python3
"""Grid over semantic growing tolerance and score gate on the moderate suite.

Thin wrapper around ``ssplabel sweep``; the CSV gets one row per grid cell
with every config column. This is the sweep used to pick the extraction
defaults.
"""
import sys

from ssplabel.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "tolerance_sweep.csv"
    sys.exit(main([
        "sweep", "--out", out, "--scenes", "50",
        "--tolerances", "0.2,0.3,0.35,0.4,0.5,0.6",
        "--thresholds", "0.3,0.4,0.5,0.6",
        "--offsets", "0",
    ]))
