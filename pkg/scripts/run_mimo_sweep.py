#!/usr/bin/env python3
"""Multiuser uplink sweep: receiver phase noise with and without residual
transmitter phase noise.

Two single-antenna users into a two-antenna receiver with per-tone ZF
beamforming; the correction basis is estimated jointly from all users'
pilot tones.  One aggregate row per (rx sigma, tx sigma) point.
"""

import sys

from pncomp.harness import main

if __name__ == "__main__":
    sys.exit(main(["run", "--scenario", "mimo_sweep"] + sys.argv[1:]))
