"""Regenerate the frozen Richardson/RK4 reference states for the fixtures."""

from __future__ import annotations

import argparse
import json
import sys

from .fixtures import ORACLE_STEP, generate_references


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="regenerate oracle reference values")
    ap.add_argument("--out", default="-")
    ap.add_argument("--h", type=float, default=ORACLE_STEP)
    args = ap.parse_args(argv)
    text = json.dumps(generate_references(args.h), indent=1) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
