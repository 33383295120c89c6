#!/usr/bin/env python3
"""Lobe counts at the fractional revivals of the alpha = 5 coherent state.

Counts the Wigner function above a fixed threshold and, for comparison, the
Q-function above half its maximum.  Optionally writes PPM heatmaps.
"""

import argparse
import math
from pathlib import Path

from kerrwigner.analysis import count_lobes
from kerrwigner.io import write_ppm
from kerrwigner.oracles import oracle_raster

REVIVALS = {"2pi/5": 2 * math.pi / 5, "pi/2": math.pi / 2, "2pi/3": 2 * math.pi / 3, "pi": math.pi}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alpha", type=float, default=5.0)
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--images", type=Path, help="directory for PPM heatmaps")
    args = p.parse_args()
    if args.images:
        args.images.mkdir(parents=True, exist_ok=True)
    for name, tau in REVIVALS.items():
        w = oracle_raster("series-q", args.alpha, tau)
        q = oracle_raster("q-function", args.alpha, tau)
        print(f"tau={name:6s} W>{args.threshold:g}: {count_lobes(w, args.threshold)}  "
              f"Q>max/2: {count_lobes(q, 0.5 * q.values.max())}  max W {w.values.max():.3f}")
        if args.images:
            write_ppm(args.images / f"revival_{name.replace('/', '_')}.ppm", w)


if __name__ == "__main__":
    main()
