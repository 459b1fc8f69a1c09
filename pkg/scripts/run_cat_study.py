"""End-to-end cat-map study: SRB density, optimal field, probe, localization.

Runs the full pipeline at the stock resolution and prints the headline
numbers; CSV outputs land in the chosen directory (default results/cat).
"""
from __future__ import annotations

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from anosovresp.cli import main as cli_main  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/cat", help="output directory")
    args = parser.parse_args()
    config = os.path.join(os.path.dirname(__file__), "..", "configs", "cat.cfg")
    started = time.time()
    for command in ("srb", "optimal", "validate", "perturbed-srb"):
        out = os.path.join(args.out, command)
        code = cli_main([command, "--config", config, "--out", out])
        if code != 0:
            print(f"{command} failed with exit code {code}")
            return code
        with open(os.path.join(out, "summary.txt")) as handle:
            print(f"--- {command} ---")
            print(handle.read().rstrip())
    print(f"total {time.time() - started:.1f}s, outputs under {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
