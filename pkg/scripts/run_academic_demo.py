#!/usr/bin/env python3
"""Full academic pipeline: certify, recommend the step, simulate, compare.

Equivalent to `fbopt demo academic --out out/academic`.
"""

import sys

from fbopt.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/academic"
    seed = sys.argv[2] if len(sys.argv) > 2 else "0"
    sys.exit(main(["demo", "academic", "--out", out, "--seed", seed]))
