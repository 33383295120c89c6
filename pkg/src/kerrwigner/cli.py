"""Command-line entry point: ``kerrwigner run`` and ``kerrwigner compare``.

Exit codes: 0 success, 2 invalid manifest or mismatched inputs,
3 numerical abort, 4 comparison above tolerance.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import negativity_intervals, negativity_report, periodicity_check
from .core import WignerField, coherent_wigner_init, phase_space_integral, raster_gammas, sample_window
from .core import CartesianRaster
from .errors import (
    HeaderMismatchError,
    InsufficientTermsError,
    InvalidManifestError,
    NormalizationDriftError,
    PrecisionTooLowError,
    SingularMatrixError,
)
from .fokker_planck import Evolution, _snapshot_steps
from .io import (
    RunManifest,
    build_manifest,
    read_any,
    read_manifest_file,
    write_field,
    write_ppm,
    write_raster,
)
from .oracles import SeriesPolicy, default_window, wigner_series_deriv, wigner_series_q

log = logging.getLogger("kerrwigner")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_TOLERANCE = 0, 2, 3, 4
_NUMERICAL = (NormalizationDriftError, SingularMatrixError, InsufficientTermsError, PrecisionTooLowError)


@dataclass
class RunResult:
    exit_code: int
    summary: dict


def _window(manifest: RunManifest):
    if manifest.window is not None:
        return manifest.window
    w = default_window(manifest.config.alpha)
    return (w, w)


def _series_fn(method: str):
    return wigner_series_q if method == "series-q" else wigner_series_deriv


def _config_dict(manifest: RunManifest) -> dict:
    c = manifest.config
    return {
        "alpha_re": c.alpha.real, "alpha_im": c.alpha.imag, "xi": c.xi, "thermal_n": c.n_thermal,
        "dtau": c.dtau, "grid": [c.grid.n_r, c.grid.n_phi], "rmax": c.grid.r_max,
        "scheme": c.scheme, "closure": c.closure, "solver": c.solver,
        "drift_tolerance": c.drift_tolerance, "method": manifest.method,
        "snapshots": list(manifest.snapshot_taus), "window": [list(p) for p in _window(manifest)],
        "resolution": manifest.resolution,
    }


class _Writer:
    """Writes one snapshot's field, raster and heatmap, and its summary entry."""

    def __init__(self, manifest: RunManifest, reference: WignerField):
        self.m = manifest
        self.reference = reference
        self.entries: list[dict] = []
        self.reports = []
        manifest.out_dir.mkdir(parents=True, exist_ok=True)

    def add(self, wfield: WignerField, raster: CartesianRaster) -> None:
        idx = len(self.entries)
        stem = self.m.out_dir / f"snap{idx:03d}"
        cfg = self.m.config
        write_field(f"{stem}_field.txt", wfield, cfg.alpha, cfg.xi, cfg.n_thermal)
        write_raster(f"{stem}_raster.txt", raster)
        write_ppm(f"{stem}.ppm", raster)
        rep = negativity_report(raster)
        self.reports.append(rep)
        turns = wfield.tau / (2 * math.pi)
        periodic = None
        if round(turns) >= 1 and abs(turns - round(turns)) < 1e-9:
            periodic = periodicity_check(self.reference, wfield)
        self.entries.append({
            "tau": wfield.tau,
            "field_file": f"{stem.name}_field.txt",
            "raster_file": f"{stem.name}_raster.txt",
            "image_file": f"{stem.name}.ppm",
            "integral": phase_space_integral(wfield),
            "negativity": {"min_value": rep.min_value, "negative_fraction": rep.negative_fraction,
                           "threshold": rep.threshold},
            "periodicity_distance_vs_tau0": periodic,
        })


def run(manifest: RunManifest, policy: SeriesPolicy = SeriesPolicy()) -> RunResult:
    """Execute a manifest, writing snapshot files plus ``summary.json`` and ``timing.json``.

    ``summary.json`` is fully deterministic; wall-clock numbers live in
    ``timing.json`` so repeated runs produce byte-identical summaries.
    """
    cfg = manifest.config
    window = _window(manifest)
    taus = sorted(manifest.snapshot_taus)
    summary = {"status": "ok", "config": _config_dict(manifest)}
    timing = {}
    t_start = time.perf_counter()
    audit: list[tuple[float, float]] = []
    writer = None
    try:
        if manifest.method == "fp":
            ev = Evolution(cfg)
            timing["setup_seconds"] = time.perf_counter() - t_start
            writer = _Writer(manifest, ev.field())
            wanted = _snapshot_steps(taus, 0.0, cfg.dtau, manifest.tau_end)

            def snap():
                f = ev.field()
                r = sample_window(f, *window, manifest.resolution,
                                  center_value=cfg.center_value(f.tau), outside="zero")
                writer.add(f, r)

            for step in wanted:
                while ev.step_index < step:
                    try:
                        ev.step()
                    finally:
                        audit[:] = ev.audit
                snap()
        else:
            fn = _series_fn(manifest.method)
            grid_g = cfg.grid.gammas()
            raster_g = raster_gammas(*window, manifest.resolution)
            writer = _Writer(manifest, coherent_wigner_init(cfg.alpha, cfg.grid))
            for tau in taus:
                f = WignerField(cfg.grid, fn(cfg.alpha, tau, grid_g, policy), tau)
                r = CartesianRaster(fn(cfg.alpha, tau, raster_g, policy), *window, tau)
                writer.add(f, r)
        code = EXIT_OK
    except _NUMERICAL as exc:
        log.error("numerical abort: %s", exc)
        summary["status"] = "aborted"
        summary["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_NUMERICAL
    timing["total_seconds"] = time.perf_counter() - t_start
    if writer is not None:
        summary["snapshots"] = writer.entries
        summary["negativity_intervals"] = [list(iv) for iv in negativity_intervals(writer.reports)]
        if summary["status"] != "ok":
            summary["partial"] = True
    summary["normalization_audit"] = [[t, v] for t, v in audit]
    if audit:
        summary["max_normalization_drift"] = max(abs(v - 1) for _, v in audit)
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    (manifest.out_dir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    (manifest.out_dir / "timing.json").write_text(json.dumps(timing, indent=1) + "\n")
    return RunResult(code, summary)


def compare(file_a, file_b) -> dict:
    """Sup-norm and mean-absolute (L1 per cell) differences between two files.

    Raises:
        HeaderMismatchError: the files have different kinds or geometry.
    """
    a, b = read_any(file_a), read_any(file_b)
    if type(a) is not type(b):
        raise HeaderMismatchError("cannot compare a polar field with a raster")
    if isinstance(a, WignerField):
        same = a.grid == b.grid
    else:
        same = (a.values.shape == b.values.shape and a.re_range == b.re_range
                and a.im_range == b.im_range)
    if not same:
        raise HeaderMismatchError("grid or raster geometry differs between the files")
    diff = np.abs(np.asarray(a.values) - np.asarray(b.values))
    return {"sup": float(diff.max()), "l1": float(diff.mean())}


# ---------------------------------------------------------------- argparse

_FLAG_KEYS = {
    "alpha_re": "alpha_re", "alpha_im": "alpha_im", "xi": "xi", "thermal_n": "thermal_n",
    "dtau": "dtau", "grid": "grid", "rmax": "rmax", "method": "method", "snapshots": "snapshots",
    "out": "out", "profile": "profile", "solver": "solver", "scheme": "scheme",
    "closure": "closure", "window": "window", "resolution": "resolution",
    "drift_tolerance": "drift_tolerance",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kerrwigner", description="Kerr-medium Wigner function simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a manifest (file and/or flags)")
    r.add_argument("manifest", nargs="?", help="key=value manifest file")
    r.add_argument("--alpha-re")
    r.add_argument("--alpha-im")
    r.add_argument("--xi")
    r.add_argument("--thermal-n")
    r.add_argument("--dtau", help="time step, e.g. pi/1800")
    r.add_argument("--grid", help="NRxNPHI, e.g. 150x270")
    r.add_argument("--rmax")
    r.add_argument("--method", choices=("fp", "series-q", "series-deriv"))
    r.add_argument("--snapshots", help="comma-separated taus, e.g. 0,pi/2,2*pi")
    r.add_argument("--out", help="output directory")
    r.add_argument("--profile", choices=("ci", "paper-replica"))
    r.add_argument("--solver", choices=("band", "azimuthal-fourier"))
    r.add_argument("--scheme", choices=("crank-nicolson", "backward-euler"))
    r.add_argument("--closure", choices=("reflect", "center-ghost", "center-pin"))
    r.add_argument("--window", help="re_min,re_max,im_min,im_max")
    r.add_argument("--resolution")
    r.add_argument("--drift-tolerance")

    c = sub.add_parser("compare", help="compare two field or raster files")
    c.add_argument("file_a")
    c.add_argument("file_b")
    c.add_argument("--tol", type=float, default=None, help="exit 4 if the sup-norm difference exceeds this")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "compare":
        try:
            rep = compare(args.file_a, args.file_b)
        except (HeaderMismatchError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"sup={rep['sup']:.6e} l1={rep['l1']:.6e}")
        if args.tol is not None and rep["sup"] > args.tol:
            print(f"sup-norm difference exceeds --tol {args.tol:g}", file=sys.stderr)
            return EXIT_TOLERANCE
        return EXIT_OK

    try:
        settings = read_manifest_file(args.manifest) if args.manifest else {}
        for attr, key in _FLAG_KEYS.items():
            val = getattr(args, attr, None)
            if val is not None:
                settings[key] = str(val)
        manifest = build_manifest(settings)
    except (InvalidManifestError, OSError) as exc:
        print(f"invalid manifest: {exc}", file=sys.stderr)
        return EXIT_INVALID
    result = run(manifest)
    s = result.summary
    for snap in s.get("snapshots", []):
        per = snap["periodicity_distance_vs_tau0"]
        extra = f" periodicity={per:.3e}" if per is not None else ""
        print(f"tau={snap['tau']:.6g} integral={snap['integral']:.6f} "
              f"minW={snap['negativity']['min_value']:.4e}{extra}")
    if result.exit_code == EXIT_NUMERICAL:
        print(f"aborted: {s.get('error')}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
