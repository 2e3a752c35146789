#!/usr/bin/env python3
"""Nelder-Mead search for the most water-sensitive winding, then the water ratio there.

    python3 scripts/optimize_sensor.py --convention listing

With the listing convention and the default 0.1 wall this lands near
nu = 0.96, d = 0.20 (cross-section), sensitivity 0.152, ratio 2.7.
"""
import argparse
import json
import sys
import time
from dataclasses import replace

from spiralcap.capacitor import ENERGY_SIGNS, CapacitorConfig, energy_report, loops_to_omega, solve_potential
from spiralcap.optimizer import optimize_sensitivity


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--convention", choices=sorted(ENERGY_SIGNS), default="equation")
    p.add_argument("--wall", type=float, default=0.1)
    p.add_argument("--tol-x", type=float, default=1e-2)
    p.add_argument("--json", help="write the full report (with every evaluation) here")
    args = p.parse_args(argv)

    base = CapacitorConfig(wall=args.wall, energy_convention=args.convention)
    t0 = time.perf_counter()
    rep = optimize_sensitivity(base, tol_x=args.tol_x)
    cfg = replace(base, omega=loops_to_omega(rep.nu_star, base.r_cyl), d=rep.d_star_cross_section,
                  fixed_cross_section=True)
    dry = energy_report(solve_potential(cfg))
    wet = energy_report(solve_potential(replace(cfg, eps_in=81.0)))
    print(f"convention={args.convention} wall={args.wall}")
    print(f"nu*={rep.nu_star:.4f} d*={rep.d_star_cross_section:.4f} (along stripe {rep.d_star_along_stripe:.4f})")
    print(f"sensitivity*={rep.sensitivity_star:.4f} after {rep.iterations} iterations "
          f"({len(rep.evaluations)} evaluations, stop={rep.reason})")
    print(f"E_total dry={dry.E_total:.3f} wet={wet.E_total:.3f} ratio={wet.C_total / dry.C_total:.3f}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({**rep.as_dict(), "water_ratio": wet.C_total / dry.C_total}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
