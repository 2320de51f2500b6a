"""Measure every kind on the fixture battery and write the package budgets.

Run once after a change to the battery or to an estimate; the tests compare
the stored battery hash with the live one and fail when they drift apart.

    python3 scripts/calibrate.py [--slack 1.1] [--out src/bicarleson/data/budgets.json]
"""
from __future__ import annotations

import argparse
import json
import pathlib
import time

from bicarleson.battery import KINDS, battery_hash, measure

DEFAULT_OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "bicarleson" / "data" / "budgets.json"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slack", type=float, default=1.1)
    ap.add_argument("--out", type=pathlib.Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    measured = {}
    for kind in KINDS:
        t = time.perf_counter()
        measured[kind] = measure(kind)
        print(f"{kind:26s} {measured[kind]:.6g}  ({time.perf_counter() - t:.1f} s)", flush=True)
    data = {
        "battery_hash": battery_hash(),
        "slack": args.slack,
        "measured": measured,
        "budgets": {k: args.slack * v for k, v in measured.items()},
    }
    args.out.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
