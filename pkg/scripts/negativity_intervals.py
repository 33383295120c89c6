#!/usr/bin/env python3
"""Negativity intervals of the alpha = 2 cat: oracle scan plus damped FP runs."""

import argparse
import math

from kerrwigner.experiments import THERMAL_N, fp_run, oracle_negativity_scan


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--xis", type=float, nargs="+", default=[0.1, 1.0, 2.0])
    p.add_argument("--periods", type=int, default=2, help="length of each FP run in units of 2 pi")
    p.add_argument("--profile", default="ci", choices=("ci", "paper-replica"))
    p.add_argument("--skip-oracle", action="store_true")
    args = p.parse_args()
    if not args.skip_oracle:
        _, iv = oracle_negativity_scan(2.0)
        print("oracle (xi=0):", [(round(a, 3), round(b, 3)) for a, b in iv])
    for xi in args.xis:
        run = fp_run(2.0, xi, THERMAL_N, args.periods * 2 * math.pi, (), args.profile)
        iv = run.negativity_intervals()
        deepest = min(m for _, m in run.minima)
        print(f"FP xi={xi:g}:", [(round(a, 3), round(b, 3)) for a, b in iv], f"deepest min {deepest:.3e}")


if __name__ == "__main__":
    main()
