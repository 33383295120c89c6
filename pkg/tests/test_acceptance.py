"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a verdict line through the ``criterion`` fixture; the
lines are printed in the pytest terminal summary.  Run this file directly
(``python3 tests/test_acceptance.py``) to execute only the acceptance suite.

Fokker-Planck runs are memoized by ``fp_run``, so criteria that look at the
same evolution share it.
"""

import math
import sys
import time

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from kerrwigner.analysis import count_lobes, periodicity_check, subplanck_metrics, vacuum_distance
from kerrwigner.banded import CompressedBandMatrix, band_lu_decompose, band_solve
from kerrwigner.experiments import THERMAL_N, fp_run, fp_vs_oracle, oracle_negativity_scan, subplanck_window_report
from kerrwigner.oracles import default_window, oracle_raster

pytestmark = pytest.mark.slow

TWO_PI = 2 * math.pi
HALF_PI = math.pi / 2
LONG_DTAU = math.pi / 900


def lossless_run():
    return fp_run(2.0, 0.0, 0.0, TWO_PI, (0.0, HALF_PI, TWO_PI), "ci")


def damped_run(xi):
    # xi = 0.1 runs two periods to expose any second-round negativity
    tau_end = 2 * TWO_PI if xi == 0.1 else TWO_PI
    return fp_run(2.0, xi, THERMAL_N, tau_end, (HALF_PI, math.pi), "ci")


def long_damped_run():
    return fp_run(2.0, 0.1, THERMAL_N, 10 * math.pi, (10 * math.pi,), "ci", LONG_DTAU)


def test_criterion_01_oracle_forms_agree(criterion):
    worst, slowest = {}, {"series-q": 0.0, "series-deriv": 0.0}
    for alpha in (1.0, 2.0, 5.0):
        diffs = []
        for tau in (0.0, 0.16, 0.3, math.pi / 3, HALF_PI, math.pi):
            rasters = {}
            for method in slowest:
                t0 = time.perf_counter()
                rasters[method] = oracle_raster(method, alpha, tau, resolution=100)
                slowest[method] = max(slowest[method], time.perf_counter() - t0)
            diffs.append(np.max(np.abs(rasters["series-q"].values - rasters["series-deriv"].values)))
        worst[alpha] = max(diffs)
    window_ok = default_window(2.0) == (-5.0, 5.0) and default_window(5.0) == (-8.0, 8.0)
    ok = max(worst.values()) <= 1e-6 and window_ok
    detail = (", ".join(f"alpha={a:g} max diff {d:.1e}" for a, d in worst.items())
              + f" (<= 1e-6); slowest raster q {slowest['series-q']:.1f}s, "
              f"deriv {slowest['series-deriv']:.1f}s")
    assert criterion(1, ok, detail), detail


def test_criterion_02_periodicity(criterion):
    run = lossless_run()
    fp_dist = periodicity_check(run.at(0.0), run.at(TWO_PI))
    oracle_dist = max(
        periodicity_check(oracle_raster("series-q", 2.0, tau), oracle_raster("series-q", 2.0, tau + TWO_PI))
        for tau in (0.0, 0.3, HALF_PI, 2.0)
    )
    ok = fp_dist <= 1e-2 and oracle_dist <= 1e-10
    detail = f"FP 2pi distance {fp_dist:.3e} (<= 1e-2); oracle tau vs tau+2pi {oracle_dist:.1e} (<= 1e-10)"
    assert criterion(2, ok, detail), detail


def test_criterion_03_solver_vs_oracle(criterion):
    t0 = time.perf_counter()
    ci = fp_vs_oracle("ci")
    t_ci = time.perf_counter() - t0
    t0 = time.perf_counter()
    replica = fp_vs_oracle("paper-replica")
    t_rep = time.perf_counter() - t0
    ok = ci <= 2e-2 and replica <= 5e-3
    detail = (f"ci {ci:.2e} (<= 2e-2, {t_ci:.0f}s); paper-replica {replica:.2e} "
              f"(<= 5e-3, {t_rep:.0f}s)")
    assert criterion(3, ok, detail), detail


def test_criterion_04_normalization_audit(criterion):
    runs = [lossless_run(), damped_run(0.1), damped_run(1.0), damped_run(2.0), long_damped_run(),
            fp_run(2.0, 0.0, 0.0, 0.2 * math.pi, (0.2 * math.pi,), "ci")]
    drift = max(abs(v - 1) for run in runs for _, v in run.audit)
    steps = sum(len(run.audit) for run in runs)
    ok = drift <= 1e-2
    detail = f"max |integral - 1| = {drift:.2e} over {steps} steps in {len(runs)} runs (<= 1e-2)"
    assert criterion(4, ok, detail), detail


def test_criterion_05_negativity_intervals(criterion):
    parts, ok = [], True

    _, oracle_iv = oracle_negativity_scan(2.0)
    first = oracle_iv[0] if oracle_iv else (math.nan, math.nan)
    good = (len(oracle_iv) == 1 and abs(first[0] - 0.08) <= 0.05 and abs(first[1] - 6.20) <= 0.05)
    ok &= good
    parts.append(f"oracle {[(round(a, 3), round(b, 3)) for a, b in oracle_iv]}")

    for xi, end in ((0.1, 5.80), (1.0, 1.52), (2.0, 0.89)):
        intervals = damped_run(xi).negativity_intervals()
        in_round_one = [iv for iv in intervals if iv[0] <= TWO_PI]
        first = in_round_one[0] if in_round_one else (math.nan, math.nan)
        good = (len(in_round_one) == 1 and abs(first[0] - 0.08) <= 0.1 and abs(first[1] - end) <= 0.1)
        ok &= good
        parts.append(f"xi={xi:g} [{first[0]:.3f}, {first[1]:.3f}]")
        if xi == 0.1:
            second = [iv for iv in intervals if iv[1] > TWO_PI]
            ok &= not second
            worst = min((m for t, m in damped_run(xi).minima if t > TWO_PI), default=0.0)
            parts.append(f"second round {[(round(a, 2), round(b, 2)) for a, b in second]} "
                         f"min {worst:.3f}")
    detail = "; ".join(parts)
    assert criterion(5, ok, detail), detail


def test_criterion_06_negativity_onset_large_alpha(criterion):
    early = oracle_raster("series-q", 5.0, 0.01).values.min()
    later = oracle_raster("series-q", 5.0, 0.04).values.min()
    ok = early >= -1e-4 and later < -1e-4
    detail = f"min W at tau=0.01 {early:.2e} (>= -1e-4); at tau=0.04 {later:.3e} (< -1e-4)"
    assert criterion(6, ok, detail), detail


def test_criterion_07_vacuum_convergence(criterion):
    cases = [
        (2.0, HALF_PI, damped_run(2.0).at(HALF_PI), 0.05),
        (1.0, math.pi, damped_run(1.0).at(math.pi), 0.05),
        (0.1, 10 * math.pi, long_damped_run().at(10 * math.pi), 0.1),
    ]
    parts, ok = [], True
    for xi, tau, field, tol in cases:
        d = vacuum_distance(field)
        ok &= d <= tol
        parts.append(f"xi={xi:g} tau={tau / math.pi:g}pi {d:.3f} (<= {tol:g})")
    detail = "; ".join(parts)
    assert criterion(7, ok, detail), detail


def test_criterion_08_revival_lobes(criterion):
    expected = {2 * math.pi / 5: 5, HALF_PI: 4, 2 * math.pi / 3: 3, math.pi: 2}
    counts = {tau: count_lobes(oracle_raster("series-q", 5.0, tau), 0.3) for tau in expected}
    ok = counts == expected
    detail = "lobes with W > 0.3: " + ", ".join(
        f"{counts[t]} (want {n})" for t, n in expected.items())
    assert criterion(8, ok, detail), detail


def test_criterion_09_subplanck_structure(criterion):
    half = (-0.5, 0.5)
    oracle = subplanck_metrics(oracle_raster("series-deriv", 2.0, HALF_PI, half, half, 100))
    ideal_run, damped = lossless_run(), damped_run(0.1)
    ideal = subplanck_window_report(ideal_run.at(HALF_PI), ideal_run.center_value(HALF_PI))
    lossy = subplanck_window_report(damped.at(HALF_PI), damped.center_value(HALF_PI))
    ok = (oracle.structure_kind == "dots" and oracle.sign_cell_count >= 4
          and ideal.sign_cell_count >= 4 and lossy.sign_cell_count <= ideal.sign_cell_count)
    detail = (f"oracle {oracle.sign_cell_count} {oracle.structure_kind}; FP xi=0 "
              f"{ideal.sign_cell_count} {ideal.structure_kind}; FP xi=0.1 {lossy.sign_cell_count}")
    assert criterion(9, ok, detail), detail


_band_stats = {"count": 0, "worst": 0.0}


@settings(max_examples=120, deadline=None)
@given(n=st.integers(1, 200), m1=st.integers(0, 8), m2=st.integers(0, 8), seed=st.integers(0, 2**32 - 1))
def _band_property(n, m1, m2, seed):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n, m1 + m2 + 1))
    for i in range(n):  # zero the slots that fall outside the matrix
        rows[i, : max(0, m1 - i)] = 0.0
        rows[i, m1 + 1 + max(0, n - i - 1):] = 0.0
    rows[:, m1] = np.abs(rows).sum(axis=1) + 1.0
    A = CompressedBandMatrix(n, m1, m2, rows)
    b = rng.standard_normal(n)
    x = band_solve(band_lu_decompose(A), b)
    ref = scipy.linalg.solve(A.to_dense(), b)
    rel = np.linalg.norm(x - ref) / np.linalg.norm(ref)
    _band_stats["count"] += 1
    _band_stats["worst"] = max(_band_stats["worst"], rel)
    assert rel <= 1e-10


def test_criterion_10_band_solver_matches_dense(criterion):
    t0 = time.perf_counter()
    try:
        _band_property()
        ok = _band_stats["count"] >= 100
    except AssertionError:
        ok = False
    detail = (f"{_band_stats['count']} random systems, worst relative error "
              f"{_band_stats['worst']:.1e} (<= 1e-10), {time.perf_counter() - t0:.1f}s")
    assert criterion(10, ok, detail), detail


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
