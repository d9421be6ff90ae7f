"""Regenerate the OTOC and mutual-information time series for both dephasing bases.

Usage: python3 scripts/run_time_series.py [--out results] [--realizations N] [--threads K]

Writes one CSV (plus manifest) per command and basis, e.g.
results/syk-otoc-computational.csv and results/syk-otoc-energy.csv.
"""
import argparse
import sys
from pathlib import Path

from scramble.cli import command_suite

ROOT = Path(__file__).resolve().parent.parent
RUNS = [("syk-otoc", "syk_otoc.toml"), ("syk-mi", "syk_mi.toml"), ("lmg-mi", "lmg_mi.toml")]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--realizations", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--only", choices=[c for c, _ in RUNS])
    args = p.parse_args(argv)
    status = 0
    for command, cfg in RUNS:
        if args.only and command != args.only:
            continue
        for basis in ("computational", "energy"):
            argv = [command, "--config", str(ROOT / "configs" / cfg), "--basis", basis, "--out", args.out]
            if args.realizations:
                argv += ["--realizations", str(args.realizations)]
            if args.threads:
                argv += ["--threads", str(args.threads)]
            status = max(status, command_suite(argv))
    return status


if __name__ == "__main__":
    sys.exit(main())
