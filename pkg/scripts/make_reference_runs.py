#!/usr/bin/env python3
"""Regenerate the cached run directories consumed by the acceptance suite.

Creates, under the repository root:

  runs/reference/   long dissipation run (simulate + analyze) plus the
                    characteristic-ray trajectory export (reduced.csv)
                    and the forced-profile export (profile.csv) so the
                    figure scripts find every input in one directory
  runs/relation/    fine-grid relation run (simulate + analyze)
  runs/asymp_half/  the relation configuration with epsilon halved

The long run takes tens of minutes at 256^3; the fine-grid runs take
about ten minutes each.  Pass --skip-reference to refresh only the
fine-grid runs.
"""
import argparse
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def sh(*cmd) -> None:
    print("+", " ".join(cmd), flush=True)
    subprocess.run(cmd, check=True, cwd=ROOT)


def halved_epsilon_config(src: str) -> str:
    with open(src) as fh:
        text = fh.read()
    out = []
    for line in text.splitlines():
        if line.startswith("epsilon"):
            value = float(line.split("=", 1)[1])
            line = f"epsilon = {value / 2.0}"
        out.append(line)
    fd, path = tempfile.mkstemp(suffix=".toml", prefix="relation_half_")
    with os.fdopen(fd, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skip-reference", action="store_true",
                    help="rebuild only the fine-grid runs")
    args = ap.parse_args()
    exe = [sys.executable, "-m", "wavelab.cli"]

    if not args.skip_reference:
        ref = os.path.join(ROOT, "runs", "reference")
        shutil.rmtree(ref, ignore_errors=True)
        sh(*exe, "simulate", "--config", "configs/reference_run.toml",
           "--out", ref, "--deterministic")
        sh(*exe, "analyze", "--run-dir", ref)
        sh(*exe, "reduce", "--config", "configs/reduced_profile.toml",
           "--omega", "0,0,1", "--v0", "0.3,0.4", "--s-end", "6.0",
           "--steps", "4000", "--out", ref)
        sh(*exe, "profile", "--phi", "re:1.0", "--e0", "0.1", "--lam", "0.5",
           "--z0", "0.2,0.0", "--out", ref)

    rel = os.path.join(ROOT, "runs", "relation")
    shutil.rmtree(rel, ignore_errors=True)
    sh(*exe, "simulate", "--config", "configs/relation_run.toml",
       "--out", rel, "--deterministic")
    sh(*exe, "analyze", "--run-dir", rel)

    half_cfg = halved_epsilon_config(os.path.join(ROOT, "configs", "relation_run.toml"))
    half = os.path.join(ROOT, "runs", "asymp_half")
    shutil.rmtree(half, ignore_errors=True)
    try:
        sh(*exe, "simulate", "--config", half_cfg, "--out", half,
           "--deterministic")
        sh(*exe, "analyze", "--run-dir", half)
    finally:
        os.unlink(half_cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
