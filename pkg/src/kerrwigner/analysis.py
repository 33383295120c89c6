"""Diagnostics over Wigner fields and rasters.

Functions accept either a polar :class:`WignerField` or a
:class:`CartesianRaster`; both expose ``values`` and ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import ndimage

from .core import TWO_OVER_PI, CartesianRaster, WignerField
from .errors import GridMismatchError, WindowTooLargeError

Sampled = Union[WignerField, CartesianRaster]

NEGATIVITY_THRESHOLD = 1e-4
SUBPLANCK_THRESHOLD = 1e-4
RIBBON_ASPECT = 2.0
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class NegativityReport:
    tau: float
    min_value: float
    negative_fraction: float
    threshold: float = NEGATIVITY_THRESHOLD

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")

    @property
    def negative(self) -> bool:
        return self.min_value < -self.threshold


def negativity_report(field: Sampled, threshold: float = NEGATIVITY_THRESHOLD) -> NegativityReport:
    v = np.asarray(field.values)
    return NegativityReport(float(field.tau), float(v.min()), float(np.mean(v < -threshold)), threshold)


def negativity_intervals(reports: Sequence[NegativityReport]) -> list[tuple[float, float]]:
    """Maximal runs of consecutive negative reports, as ``(first tau, last tau)``."""
    out, start, prev = [], None, None
    for rep in reports:
        if rep.negative:
            if start is None:
                start = rep.tau
            prev = rep.tau
        elif start is not None:
            out.append((start, prev))
            start = None
    if start is not None:
        out.append((start, prev))
    return out


def negativity_scan(fields: Sequence[Sampled], threshold: float = NEGATIVITY_THRESHOLD
                    ) -> tuple[list[NegativityReport], list[tuple[float, float]]]:
    """One report per field (ordered by tau) plus the negativity intervals."""
    reports = [negativity_report(f, threshold) for f in fields]
    taus = [r.tau for r in reports]
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("fields must be ordered by tau")
    return reports, negativity_intervals(reports)


def _same_support(a: Sampled, b: Sampled) -> bool:
    if isinstance(a, WignerField) and isinstance(b, WignerField):
        return a.grid == b.grid
    if isinstance(a, CartesianRaster) and isinstance(b, CartesianRaster):
        return (a.values.shape == b.values.shape and np.allclose(a.re_range, b.re_range)
                and np.allclose(a.im_range, b.im_range))
    return False


def periodicity_check(field_a: Sampled, field_b: Sampled) -> float:
    """Sup-norm distance between two samples on the same grid or raster.

    Raises:
        GridMismatchError: the samples live on different supports.
    """
    if not _same_support(field_a, field_b):
        raise GridMismatchError("periodicity_check needs identical grids")
    return float(np.max(np.abs(np.asarray(field_a.values) - np.asarray(field_b.values))))


def vacuum_values(field: Sampled) -> np.ndarray:
    g = field.grid.gammas() if isinstance(field, WignerField) else field.gammas()
    return TWO_OVER_PI * np.exp(-2 * np.abs(g) ** 2)


def vacuum_distance(field: Sampled) -> float:
    """Sup-norm distance to the vacuum Wigner function (2/pi) exp(-2 r^2)."""
    return float(np.max(np.abs(np.asarray(field.values) - vacuum_values(field))))


def count_lobes(raster: Sampled, threshold: float = 0.3) -> int:
    """Number of 4-connected regions where W exceeds ``threshold``.

    For a polar field the azimuthal direction wraps, so regions crossing
    phi = 0 are merged.
    """
    v = np.asarray(raster.values)
    labels, n = ndimage.label(v > threshold, structure=FOUR_CONNECTED)
    if isinstance(raster, WignerField) and n:
        parent = list(range(n + 1))

        def find(i):
            while parent[i] != i:
                i = parent[i]
            return i

        for a, b in zip(labels[:, 0], labels[:, -1]):
            if a and b:
                parent[find(a)] = find(b)
        n = len({find(i) for i in range(1, n + 1)})
    return int(n)


@dataclass(frozen=True)
class SubPlanckReport:
    window: tuple[tuple[float, float], tuple[float, float]]
    sign_cell_count: int
    structure_kind: str  # "dots", "ribbons" or "none"
    positive_count: int = 0
    negative_count: int = 0
    mean_aspect_ratio: float = float("nan")

    def __post_init__(self):
        if self.sign_cell_count < 0:
            raise ValueError("counts must be non-negative")


def _aspect_ratios(mask_labels: np.ndarray, n: int, dx: float, dy: float) -> list[float]:
    out = []
    for lab in range(1, n + 1):
        rows, cols = np.nonzero(mask_labels == lab)
        pts = np.stack([cols * dx, rows * dy])
        # each cell is a dx-by-dy square: add its own second moment
        cov = np.cov(pts, bias=True) if pts.shape[1] > 1 else np.zeros((2, 2))
        cov = cov + np.diag([dx * dx / 12, dy * dy / 12])
        ev = np.linalg.eigvalsh(cov)
        out.append(math.sqrt(ev[-1] / ev[0]))
    return out


def subplanck_metrics(raster: CartesianRaster, window=None,
                      threshold: float = SUBPLANCK_THRESHOLD) -> SubPlanckReport:
    """Count same-sign connected regions inside a sub-Planck window.

    Cells with ``|W| <= threshold`` separate regions.  When both signs
    occur, the mean aspect ratio of all regions decides between "dots"
    (at most 2) and "ribbons"; a single-signed raster is kind "none".

    Raises:
        WindowTooLargeError: the window area exceeds 1.
    """
    if window is None:
        window = (tuple(raster.re_range), tuple(raster.im_range))
    (x0, x1), (y0, y1) = window
    if (x1 - x0) * (y1 - y0) > 1 + 1e-12:
        raise WindowTooLargeError(f"window area {(x1 - x0) * (y1 - y0):.4g} exceeds 1")
    re, im = raster.axes()
    cols = (re >= x0 - 1e-12) & (re <= x1 + 1e-12)
    rows = (im >= y0 - 1e-12) & (im <= y1 + 1e-12)
    v = np.asarray(raster.values)[np.ix_(rows, cols)]
    dx = re[1] - re[0] if re.size > 1 else 1.0
    dy = im[1] - im[0] if im.size > 1 else 1.0
    pos_labels, n_pos = ndimage.label(v > threshold, structure=FOUR_CONNECTED)
    neg_labels, n_neg = ndimage.label(v < -threshold, structure=FOUR_CONNECTED)
    total = n_pos + n_neg
    if n_pos == 0 or n_neg == 0:
        return SubPlanckReport(((x0, x1), (y0, y1)), total, "none", n_pos, n_neg)
    ratios = _aspect_ratios(pos_labels, n_pos, dx, dy) + _aspect_ratios(neg_labels, n_neg, dx, dy)
    mean = float(np.mean(ratios))
    kind = "dots" if mean <= RIBBON_ASPECT else "ribbons"
    return SubPlanckReport(((x0, x1), (y0, y1)), total, kind, n_pos, n_neg, mean)
