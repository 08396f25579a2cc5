#!/usr/bin/env python3
"""Full feeder pipeline: gamma sampling, LFT certification, replay, compare.

Equivalent to `fbopt demo feeder --out out/feeder`.
"""

import sys

from fbopt.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/feeder"
    seed = sys.argv[2] if len(sys.argv) > 2 else "0"
    sys.exit(main(["demo", "feeder", "--out", out, "--seed", seed]))
