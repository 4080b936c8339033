#!/usr/bin/env python3
"""Reproduce the full density x condition comparison grid.

Thin wrapper over ``saai sweep`` pinned to the headline protocol:
densities 300/400/500, cloudy and sunny, ten seeds per cell, ten frames
at one-meter spacing from 35 m.  Takes a few minutes on one core and
writes rows.csv plus summary.json.  Any extra flags pass through, e.g.::

    python3 scripts/run_sweep.py --workers 4 --out /tmp/sweep
"""

import sys

from saai.cli import main

DEFAULTS = [
    "sweep",
    "--densities", "300,400,500",
    "--conditions", "cloudy,sunny",
    "--seeds", "10",
    "--frames", "10",
    "--spacing", "1.0",
    "--altitude", "35",
]

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--out" not in argv:
        argv = ["--out", "sweep_results"] + argv
    sys.exit(main(DEFAULTS + argv))
