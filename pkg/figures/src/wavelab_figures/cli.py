"""Command-line driver: build every figure found in a run directory.

Usage: wavelab-figures --run-dir <dir> --out <dir> [--coupling C]
       [--c1 A --c2 B]

Looks for energies.csv, reduced.csv, profile.csv, and
translation_1.csv/translation_2.csv; each present input produces one
image, a schema mismatch exits nonzero.  Re-running overwrites images.
"""
from __future__ import annotations

import argparse
import os
import sys

from .plots import SchemaError, plot_energies, plot_iteration, plot_profile, plot_relation


def make_all(
    run_dir: str,
    out_dir: str,
    coupling: float = 0.5,
    c1: float = 1.0,
    c2: float = 0.0,
) -> list:
    os.makedirs(out_dir, exist_ok=True)
    made = []

    def src(name):
        path = os.path.join(run_dir, name)
        return path if os.path.exists(path) else None

    if (p := src("energies.csv")) is not None:
        made.append(plot_energies(p, os.path.join(out_dir, "energies.png")))
    if (p := src("reduced.csv")) is not None:
        made.append(
            plot_profile(p, os.path.join(out_dir, "profile_plane.png"), coupling)
        )
    if (p := src("profile.csv")) is not None:
        made.append(plot_iteration(p, os.path.join(out_dir, "iteration.png")))
    p1, p2 = src("translation_1.csv"), src("translation_2.csv")
    if p1 is not None and p2 is not None:
        made.append(
            plot_relation(p1, p2, os.path.join(out_dir, "relation_map.png"), c1, c2)
        )
    return made


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wavelab-figures", description=__doc__)
    ap.add_argument("--run-dir", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--coupling", type=float, default=0.5,
                    help="coupling constant of the closed-form overlay")
    ap.add_argument("--c1", type=float, default=1.0)
    ap.add_argument("--c2", type=float, default=0.0)
    args = ap.parse_args(argv)
    if not os.path.isdir(args.run_dir):
        print(f"run directory not found: {args.run_dir}", file=sys.stderr)
        return 2
    try:
        made = make_all(args.run_dir, args.out, args.coupling, args.c1, args.c2)
    except SchemaError as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 1
    if not made:
        print("no recognized CSV inputs in run directory", file=sys.stderr)
        return 1
    for path in made:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
