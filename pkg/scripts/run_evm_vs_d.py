#!/usr/bin/env python3
"""EVM versus basis size: KL against DFT at sigma = 3 degrees.

Sweeps the number of basis elements d (0 = no compensation, 1 = common
phase error only) for both basis kinds and writes one aggregate CSV row
per (kind, d) point.  Use --full for the 300-channel run.
"""

import sys

from pncomp.harness import main

if __name__ == "__main__":
    sys.exit(main(["run", "--scenario", "evm_vs_d"] + sys.argv[1:]))
