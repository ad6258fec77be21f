"""Outcome probabilities for one and two F_y measurements, plus the
intermediate-outcome-averaged Wigner function.

    python3 scripts/outcome_tables.py [--wigner out.csv]
"""

import argparse
import math

from backaction import thermal as th
from backaction.params import PAPER_PARAMS, PhysicalConstants, derive_params

LABEL = {1: "+1", 0: " 0", -1: "-1"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wigner", help="write the averaged Wigner grid (final F_y=+1) to this CSV")
    ap.add_argument("--A-scale", type=float, default=1.0)
    args = ap.parse_args()
    d = derive_params(PhysicalConstants(), PAPER_PARAMS)
    d = d.with_A(args.A_scale * d.A)
    T = math.pi / d.omega_m

    print("single measurement at t = pi/omega_m")
    for seq, p in th.outcome_table(d, [T]).items():
        print(f"  P(F_y={LABEL[seq[0]]}) = {p:.6f}")

    print("measurements at pi/(2 omega_m) and pi/omega_m")
    table = th.outcome_table(d, [T / 2, T / 2])
    for seq, p in table.items():
        print(f"  P({LABEL[seq[0]]}, {LABEL[seq[1]]}) = {p:.6f}")
    for s, p in th.marginal_last(table).items():
        print(f"  P(final={LABEL[s]}) = {p:.6f}")

    if args.wigner:
        W = th.wigner_post_marginal(d, [T / 2, T / 2], 1, deterministic=True)
        W.write(args.wigner.removesuffix(".csv"), A_scale=args.A_scale)
        print(f"wrote {args.wigner}")


if __name__ == "__main__":
    main()
