"""Regenerate tests/golden/ from the shipped coffee sample via the CLI.

rank --heuristic -> encode (default profile) -> truncate L1 -> decode.
Only rerun this when the bitstream format changes on purpose.
"""

import sys
from pathlib import Path

from sdcomp.cli import run

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "data" / "corpus"
GOLDEN = ROOT / "tests" / "golden"


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    steps = [
        ["rank", "--image", CORPUS / "coffee.ppm", "--priors", CORPUS / "coffee.json",
         "--heuristic", "--out", GOLDEN / "coffee_ranked.json"],
        ["encode", "--image", CORPUS / "coffee.ppm", "--priors", GOLDEN / "coffee_ranked.json",
         "--out", GOLDEN / "coffee.sdc"],
        ["truncate", "--in", GOLDEN / "coffee.sdc", "--max-level", "1",
         "--out", GOLDEN / "coffee_L1.sdc"],
        ["decode", "--in", GOLDEN / "coffee_L1.sdc", "--out", GOLDEN / "coffee_L1.ppm"],
    ]
    for argv in steps:
        code = run([str(a) for a in argv])
        if code:
            sys.exit(f"{argv[0]} failed with exit code {code}")


if __name__ == "__main__":
    main()
