"""Reusable experiment drivers shared by the scripts and the acceptance suite.

Each driver returns plain data (fields, reports, numbers).  Long solver runs
are memoized per process so that several checks can share one evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .analysis import NegativityReport, negativity_intervals, subplanck_metrics, vacuum_distance
from .core import WignerField, config_from_profile, sample_window
from .fokker_planck import Evolution, _snapshot_steps
from .oracles import oracle_raster, wigner_series_deriv

THERMAL_N = 3.8e-19  # rescaled thermal occupation used with alpha = 2


@dataclass
class FPRun:
    """Outcome of one Fokker-Planck evolution."""

    snapshots: dict[float, WignerField]
    audit: list[tuple[float, float]]
    minima: list[tuple[float, float]] = field(default_factory=list)
    center_value: object = None

    def at(self, tau: float) -> WignerField:
        key = min(self.snapshots, key=lambda t: abs(t - tau))
        if abs(key - tau) > 1e-9:
            raise KeyError(f"no snapshot at tau={tau}")
        return self.snapshots[key]

    def negativity_reports(self, threshold: float = 1e-4) -> list[NegativityReport]:
        """Per-step reports from the recorded field minima (fraction not tracked)."""
        return [NegativityReport(t, m, float("nan"), threshold) for t, m in self.minima]

    def negativity_intervals(self, threshold: float = 1e-4) -> list[tuple[float, float]]:
        return negativity_intervals(self.negativity_reports(threshold))


@lru_cache(maxsize=None)
def fp_run(alpha: float = 2.0, xi: float = 0.0, n_thermal: float = 0.0, tau_end: float = 2 * math.pi,
           snapshot_taus: tuple[float, ...] = (), profile: str = "ci", dtau: float | None = None,
           solver: str = "azimuthal-fourier", scheme: str = "crank-nicolson",
           closure: str = "reflect") -> FPRun:
    """Evolve the coherent state and keep snapshots, the audit and per-step minima."""
    kwargs = dict(xi=xi, n_thermal=n_thermal, solver=solver, scheme=scheme, closure=closure,
                  drift_tolerance=None)
    if dtau is not None:
        kwargs["dtau"] = dtau
    cfg = config_from_profile(profile, alpha, **kwargs)
    ev = Evolution(cfg)
    steps = _snapshot_steps(snapshot_taus, 0.0, cfg.dtau, tau_end)
    snaps = {}
    if 0 in steps:
        snaps[0.0] = ev.field()
    minima = []
    n_steps = int(round(tau_end / cfg.dtau))
    for _ in range(n_steps):
        ev.step()
        minima.append((ev.tau, float(ev.values.min())))
        if ev.step_index in steps:
            snaps[snapshot_taus[steps.index(ev.step_index)]] = ev.field()
    return FPRun(snaps, list(ev.audit), minima, cfg.center_value)


def fp_vs_oracle(profile: str, tau: float = 0.2 * math.pi, alpha: float = 2.0) -> float:
    """Sup-norm distance between the lossless FP field and the series oracle on the grid nodes."""
    run = fp_run(alpha, 0.0, 0.0, tau, (tau,), profile)
    f = run.at(tau)
    exact = wigner_series_deriv(alpha, tau, f.grid.gammas())
    return float(np.max(np.abs(f.values - exact)))


def oracle_negativity_scan(alpha: float = 2.0, dtau: float = 0.02, tau_end: float = 2 * math.pi,
                           method: str = "series-q"):
    """Oracle rasters every ``dtau`` over ``[0, tau_end]``; returns (reports, intervals)."""
    from .analysis import negativity_scan

    taus = np.round(np.arange(0.0, tau_end + 1e-9, dtau), 12)
    return negativity_scan([oracle_raster(method, alpha, float(t)) for t in taus])


def subplanck_window_report(wfield: WignerField, center_value: float, half: float = 0.5,
                            resolution: int = 100):
    r = sample_window(wfield, (-half, half), (-half, half), resolution, center_value=center_value)
    return subplanck_metrics(r)


def vacuum_distances(cases=((2.0, 0.5 * math.pi), (1.0, math.pi), (0.1, 10 * math.pi)),
                     dtau_long: float | None = math.pi / 900) -> dict[float, float]:
    """Vacuum distance for each ``(xi, tau)`` case at alpha = 2 (ci profile).

    Runs reaching beyond 5 pi use the coarser ``dtau_long`` step.
    """
    out = {}
    for xi, tau in cases:
        dt = dtau_long if tau > 5 * math.pi else None
        run = fp_run(2.0, xi, THERMAL_N, tau, (tau,), "ci", dt)
        out[xi] = vacuum_distance(run.at(tau))
    return out
