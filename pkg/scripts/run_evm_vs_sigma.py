#!/usr/bin/env python3
"""EVM versus phase-noise level at fixed basis size d = 8.

Sweeps the phase-noise standard deviation for the KL and DFT bases,
showing how much more phase noise the matched basis tolerates before
the 256-QAM EVM budget (-32 dB) is exhausted.
"""

import sys

from pncomp.harness import main

if __name__ == "__main__":
    sys.exit(main(["run", "--scenario", "evm_vs_sigma"] + sys.argv[1:]))
