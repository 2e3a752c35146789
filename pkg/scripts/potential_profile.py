#!/usr/bin/env python3
"""Potential along the y axis for a few winding frequencies, as a CSV table.

    python3 scripts/potential_profile.py --nu 0 0.5 1 2 > profile.csv
"""
import argparse
import sys
from dataclasses import replace

from spiralcap import io
from spiralcap.capacitor import CapacitorConfig, loops_to_omega, profile_along_y, solve_potential


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nu", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--d", type=float, default=0.2, help="width along the stripe")
    args = p.parse_args(argv)

    columns = []
    for nu in args.nu:
        cfg = replace(CapacitorConfig(d=args.d), omega=loops_to_omega(nu, 1.0))
        columns.append(profile_along_y(solve_potential(cfg), args.n))
    y = [pt[0] for pt in columns[0]]
    rows = [(yy, *(col[i][1] for col in columns)) for i, yy in enumerate(y)]
    header = ["y"] + [f"u_nu{nu:g}" for nu in args.nu]
    sys.stdout.write(io.csv_text(header, rows, {"nu": args.nu, "d": args.d, "n": args.n}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
