#!/usr/bin/env python3
"""Distance between the lossless FP field at tau = 0 and after one full period."""

import argparse
import math

from kerrwigner.analysis import periodicity_check
from kerrwigner.experiments import fp_run


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--profile", default="ci", choices=("ci", "paper-replica"))
    p.add_argument("--scheme", default="crank-nicolson", choices=("crank-nicolson", "backward-euler"))
    p.add_argument("--closure", default="reflect", choices=("reflect", "center-ghost", "center-pin"))
    args = p.parse_args()
    two_pi = 2 * math.pi
    run = fp_run(args.alpha, 0.0, 0.0, two_pi, (0.0, two_pi), args.profile,
                 scheme=args.scheme, closure=args.closure)
    print(f"sup |W(2pi) - W(0)| = {periodicity_check(run.at(0.0), run.at(two_pi)):.4e}")
    print(f"max normalization drift = {max(abs(v - 1) for _, v in run.audit):.2e}")


if __name__ == "__main__":
    main()
