"""Interference-fringe amplitude of the post-measurement Wigner function
versus the backaction parameter (single F_y=+1 outcome at t = pi/omega_m).

    python3 scripts/fringe_scaling.py 0.01 0.1 1
"""

import argparse

from backaction import thermal as th
from backaction.functionals import MeasurementSchedule
from backaction.params import PAPER_PARAMS, PhysicalConstants, derive_params, visibility_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scales", nargs="*", type=float, default=[0.01, 0.1, 1.0])
    args = ap.parse_args()
    base = derive_params(PhysicalConstants(), PAPER_PARAMS)
    for s in args.scales:
        d = base.with_A(s * base.A)
        sch = MeasurementSchedule.in_half_periods([1.0], [1], d.omega_m)
        grid = th.fringe_resolving_grid(d, sch)
        W = th.wigner_post(d, sch, grid)
        print(f"A/A0 = {s:<6g} grid {grid.nq}x{grid.nk}  fringe amplitude {th.fringe_amplitude(W):.5f}  "
              f"A/(x_zp sqrt(nbar)) = {visibility_ratio(d):.3e}")


if __name__ == "__main__":
    main()
