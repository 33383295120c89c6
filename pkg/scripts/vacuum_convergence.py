#!/usr/bin/env python3
"""Sup-norm distance of damped alpha = 2 evolutions to the vacuum state."""

import math

from kerrwigner.experiments import vacuum_distances

if __name__ == "__main__":
    cases = ((2.0, 0.5 * math.pi), (1.0, math.pi), (0.1, 10 * math.pi))
    for xi, d in vacuum_distances(cases).items():
        tau = dict(cases)[xi]
        print(f"xi={xi:g} tau={tau / math.pi:g}pi  vacuum distance {d:.4f}")
