"""Scan the first measurement time and report where the coherent-state
Wigner function goes negative.

    python3 scripts/negativity_windows.py --a0 1 --b0 1 --outcome 0
"""

import argparse
import math

import numpy as np

from backaction import coherent as coh
from backaction.params import PAPER_PARAMS, PhysicalConstants, derive_params


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a0", type=float, default=1.0)
    ap.add_argument("--b0", type=float, default=1.0)
    ap.add_argument("--outcome", type=int, default=0, choices=(1, 0, -1))
    ap.add_argument("--step-pi", type=float, default=0.02)
    ap.add_argument("--t-max-pi", type=float, default=2.0)
    ap.add_argument("--points", type=int, default=121)
    ap.add_argument("--larmor", type=float, help="override the Larmor frequency (rad/s); 0 switches it off")
    ap.add_argument("--verbose", action="store_true", help="print min W for every time")
    args = ap.parse_args()

    d = derive_params(PhysicalConstants(), PAPER_PARAMS)
    if args.larmor is not None:
        d = d.with_larmor(args.larmor)
    n = int(round(args.t_max_pi / args.step_pi))
    ts = np.arange(1, n + 1) * args.step_pi * math.pi / d.omega_m
    scan = coh.negativity_scan(d, coh.CoherentInit(args.a0, args.b0), args.outcome, ts, args.points)
    scan = [(t * d.omega_m / math.pi, m) for t, m in scan]
    if args.verbose:
        for t, m in scan:
            print(f"t = {t:.3f} pi/omega_m   min W = {m:+.5f}")
    wins = coh.negative_windows(scan)
    print("negative windows (units of pi/omega_m):", ", ".join(f"[{a:.2f}, {b:.2f}]" for a, b in wins) or "none")


if __name__ == "__main__":
    main()
