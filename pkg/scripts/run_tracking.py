#!/usr/bin/env python3
"""Adaptive subspace tracking runs with decision direction.

Compares the tracked basis against fixed DFT and CPE-only baselines,
optionally under a residual carrier offset (set `ppm` in the config
file).  Emits per-symbol rows plus one aggregate row per mode.
"""

import sys

from pncomp.harness import main

if __name__ == "__main__":
    sys.exit(main(["run", "--scenario", "tracking"] + sys.argv[1:]))
