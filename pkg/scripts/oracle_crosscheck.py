#!/usr/bin/env python3
"""Compare the two analytic series forms on full rasters and time them."""

import argparse
import math
import time

import numpy as np

from kerrwigner.oracles import oracle_raster


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alphas", type=float, nargs="+", default=[1.0, 2.0, 5.0])
    p.add_argument("--taus", type=float, nargs="+",
                   default=[0.0, 0.16, 0.3, math.pi / 3, math.pi / 2, math.pi])
    p.add_argument("--resolution", type=int, default=100)
    args = p.parse_args()
    print(f"{'alpha':>6} {'tau':>8} {'max|q-deriv|':>14} {'t_q[s]':>8} {'t_deriv[s]':>10}")
    for alpha in args.alphas:
        for tau in args.taus:
            t0 = time.perf_counter()
            q = oracle_raster("series-q", alpha, tau, resolution=args.resolution)
            t1 = time.perf_counter()
            d = oracle_raster("series-deriv", alpha, tau, resolution=args.resolution)
            t2 = time.perf_counter()
            diff = np.max(np.abs(q.values - d.values))
            print(f"{alpha:6g} {tau:8.4f} {diff:14.3e} {t1 - t0:8.2f} {t2 - t1:10.2f}")


if __name__ == "__main__":
    main()
