#!/usr/bin/env python3
"""Capacitance and sensitivity against winding frequency.

    python3 scripts/sweep_winding.py --convention listing --wall 0.025 --d 0.1 --out sweep.csv

Defaults match the acceptance sweep: wall 0.025, cross-section width 0.1.
"""
import argparse
import sys
from pathlib import Path

from spiralcap import io
from spiralcap.capacitor import ENERGY_SIGNS, CapacitorConfig, sweep_omega


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid", type=float, nargs="+", default=[0.1, 0.25, 0.5, 1.0, 1.5, 2.0])
    p.add_argument("--wall", type=float, default=0.025)
    p.add_argument("--d", type=float, default=0.1)
    p.add_argument("--along-stripe", action="store_true",
                   help="d is the width along the stripe (default: cross-section width)")
    p.add_argument("--convention", choices=sorted(ENERGY_SIGNS) + ["both"], default="both")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (one file per convention, suffixed)")
    args = p.parse_args(argv)

    conventions = sorted(ENERGY_SIGNS) if args.convention == "both" else [args.convention]
    for conv in conventions:
        cfg = CapacitorConfig(wall=args.wall, d=args.d, fixed_cross_section=not args.along_stripe,
                              energy_convention=conv)
        rows = sweep_omega(cfg, args.grid, jobs=args.jobs)
        print(f"# energy_convention={conv} wall={args.wall} d={args.d}")
        print(f"{'nu':>6} {'C_total':>12} {'C_in':>10} {'sensitivity':>12}")
        for r in rows:
            print(f"{r.nu:6.3f} {r.C_total:12.4f} {r.C_in:10.4f} {r.sensitivity:12.4f} {r.error}")
        if args.out:
            path = Path(args.out)
            if len(conventions) > 1:
                path = path.with_name(f"{path.stem}_{conv}{path.suffix}")
            meta = {"wall": args.wall, "d": args.d, "fixed_cross_section": not args.along_stripe,
                    "energy_convention": conv, "grid": args.grid}
            path.write_text(io.csv_text(["nu_loops_per_radius", "c_total", "c_in", "sensitivity", "error"],
                                        [(r.nu, r.C_total, r.C_in, r.sensitivity, r.error) for r in rows], meta))
    return 0


if __name__ == "__main__":
    sys.exit(main())
