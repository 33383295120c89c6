"""Phase-space geometry, Wigner field containers and quadrature.

The polar mesh excludes the origin: ring ``i`` sits at ``r = (i + 1) * dr``
and angle ``j`` at ``phi = j * dphi``.  Field values are stored as an
``(n_r, n_phi)`` array, i.e. row-major with phi fastest, which is the same
ordering the linear system uses (``k = n_phi * i + j``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import WindowExceedsGridError

TWO_OVER_PI = 2.0 / math.pi


@dataclass(frozen=True)
class PhasePoint:
    r: float
    phi: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be non-negative")
        if not 0.0 <= self.phi < 2 * math.pi:
            object.__setattr__(self, "phi", self.phi % (2 * math.pi))

    @property
    def re(self) -> float:
        return self.r * math.cos(self.phi)

    @property
    def im(self) -> float:
        return self.r * math.sin(self.phi)

    @property
    def gamma(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, gamma: complex) -> "PhasePoint":
        return cls(abs(gamma), math.atan2(gamma.imag, gamma.real) % (2 * math.pi))


@dataclass(frozen=True)
class PolarGrid:
    n_r: int
    n_phi: int
    r_max: float

    def __post_init__(self):
        if self.n_r < 5 or self.n_phi < 5:
            raise ValueError("4th-order stencils need n_r >= 5 and n_phi >= 5")
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")

    @property
    def dr(self) -> float:
        return self.r_max / self.n_r

    @property
    def dphi(self) -> float:
        return 2 * math.pi / self.n_phi

    @property
    def radii(self) -> np.ndarray:
        return (np.arange(self.n_r) + 1) * self.dr

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_phi) * self.dphi

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_phi)

    @property
    def size(self) -> int:
        return self.n_r * self.n_phi

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.radii, self.angles, indexing="ij")

    def gammas(self) -> np.ndarray:
        """Complex phase-space coordinate of every node, shape ``(n_r, n_phi)``."""
        r, phi = self.mesh()
        return r * np.exp(1j * phi)

    @classmethod
    def parse(cls, text: str, r_max: float) -> "PolarGrid":
        """Parse an ``NRxNPHI`` string such as ``150x270``."""
        n_r, n_phi = (int(v) for v in text.lower().split("x"))
        return cls(n_r, n_phi, r_max)


def default_r_max(alpha: complex) -> float:
    return max(5.0, 2.5 * abs(alpha))


@dataclass(frozen=True)
class WignerField:
    grid: PolarGrid
    values: np.ndarray
    tau: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Wigner field contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def rotated(self, steps: int) -> "WignerField":
        """Field rotated by ``steps * dphi`` (exact on grid nodes)."""
        return WignerField(self.grid, np.roll(self.values, steps, axis=1), self.tau, dict(self.meta))


@dataclass(frozen=True)
class SimulationConfig:
    alpha: complex
    xi: float = 0.0
    n_thermal: float = 0.0
    dtau: float = math.pi / 1800
    grid: PolarGrid | None = None
    scheme: str = "crank-nicolson"
    closure: str = "reflect"
    solver: str = "band"
    drift_tolerance: float | None = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.grid is None:
            object.__setattr__(self, "grid", PolarGrid(150, 270, default_r_max(self.alpha)))
        if self.xi < 0:
            raise ValueError("xi must be >= 0")
        if self.n_thermal < 0:
            raise ValueError("n_thermal must be >= 0")
        if self.dtau <= 0:
            raise ValueError("dtau must be > 0")
        if self.grid.r_max < 2 * abs(self.alpha):
            raise ValueError("r_max must be at least 2|alpha| so the field fits on the grid")
        if self.scheme not in ("backward-euler", "crank-nicolson"):
            raise ValueError(f"unknown time scheme {self.scheme!r}")
        if self.closure not in ("reflect", "center-ghost", "center-pin"):
            raise ValueError(f"unknown inner closure {self.closure!r}")
        if self.solver not in ("band", "azimuthal-fourier"):
            raise ValueError(f"unknown linear solver {self.solver!r}")

    @property
    def theta(self) -> float:
        """Implicitness weight: 1 for backward Euler, 1/2 for Crank-Nicolson."""
        return 1.0 if self.scheme == "backward-euler" else 0.5

    def center_value(self, tau: float) -> float:
        """Prescribed W(tau, 0, 0) = (2/pi) exp(-2|alpha|^2 exp(-xi tau))."""
        return TWO_OVER_PI * math.exp(-2 * abs(self.alpha) ** 2 * math.exp(-tau * self.xi))


# Named grid/step presets.  "ci" is a quarter of the reference resolution.
PROFILES = {
    "ci": (150, 270, math.pi / 1800),
    "paper-replica": (300, 540, math.pi / 3600),
}


def rescaled_damping(alpha: complex) -> tuple[float, float]:
    """Desk-scale damping preset: ``xi ~ |alpha|`` and ``N = 1.9e-19 * xi``."""
    xi = abs(alpha)
    return xi, 1.9e-19 * xi


def config_from_profile(profile: str, alpha: complex, **kwargs) -> SimulationConfig:
    n_r, n_phi, dtau = PROFILES[profile]
    r_max = kwargs.pop("r_max", default_r_max(alpha))
    kwargs.setdefault("dtau", dtau)
    return SimulationConfig(alpha=alpha, grid=PolarGrid(n_r, n_phi, r_max), **kwargs)


def coherent_wigner(alpha: complex, gamma) -> np.ndarray:
    """(2/pi) exp(-2|alpha - gamma|^2), vectorized over ``gamma``."""
    return TWO_OVER_PI * np.exp(-2 * np.abs(complex(alpha) - np.asarray(gamma)) ** 2)


def coherent_wigner_init(alpha: complex, grid: PolarGrid) -> WignerField:
    return WignerField(grid, coherent_wigner(alpha, grid.gammas()), 0.0)


def field_from_function(grid: PolarGrid, fn: Callable[[np.ndarray], np.ndarray], tau: float = 0.0) -> WignerField:
    return WignerField(grid, fn(grid.gammas()), tau)


def radial_weights(grid: PolarGrid) -> np.ndarray:
    """Trapezoid weights on [0, r_max] including the implicit origin node.

    The origin contributes ``r * W = 0`` so only the stored rings appear;
    the outermost ring gets half weight.
    """
    w = np.full(grid.n_r, grid.dr)
    w[-1] = 0.5 * grid.dr
    return w


def phase_space_integral(field: WignerField) -> float:
    """Integral of W r dr dphi: trapezoid in r, periodic rectangle rule in phi."""
    grid = field.grid
    ring_sums = field.values.sum(axis=1) * grid.dphi
    return float(np.sum(radial_weights(grid) * grid.radii * ring_sums))


@dataclass(frozen=True)
class CartesianRaster:
    values: np.ndarray  # shape (res, res); row index = Im, column index = Re
    re_range: tuple[float, float]
    im_range: tuple[float, float]
    tau: float = 0.0

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        res = self.resolution
        return np.linspace(*self.re_range, res), np.linspace(*self.im_range, res)

    def gammas(self) -> np.ndarray:
        return raster_gammas(self.re_range, self.im_range, self.resolution)


def raster_gammas(re_range, im_range, resolution: int) -> np.ndarray:
    """Complex nodes of a square raster, ``[row, col] = (im, re)``, endpoints included."""
    re = np.linspace(re_range[0], re_range[1], resolution)
    im = np.linspace(im_range[0], im_range[1], resolution)
    return re[None, :] + 1j * im[:, None]


def interpolate_polar(field: WignerField, gamma: np.ndarray, center_value: float | None = None,
                      outside: str = "error") -> np.ndarray:
    """Bilinear interpolation in (r, phi) at arbitrary points.

    Points with ``r < dr`` interpolate between the origin value and ring 0;
    the origin value defaults to the ring-0 azimuthal mean.  Points beyond
    ``r_max`` raise unless ``outside="zero"``, which clamps them to 0.
    """
    grid = field.grid
    gamma = np.asarray(gamma, dtype=complex)
    r = np.abs(gamma)
    phi = np.mod(np.angle(gamma), 2 * np.pi)
    beyond = r > grid.r_max * (1 + 1e-12)
    if outside == "error" and np.any(beyond):
        raise WindowExceedsGridError(f"points with r up to {r.max():.4g} exceed r_max={grid.r_max:.4g}")
    vals = field.values
    if center_value is None:
        center_value = float(vals[0].mean())
    # radial position in ring units, ring i at u = i, origin at u = -1
    u = np.clip(r / grid.dr - 1.0, -1.0, grid.n_r - 1)
    i0 = np.floor(u).astype(int)
    i0 = np.clip(i0, -1, grid.n_r - 2)
    fu = u - i0
    v = phi / grid.dphi
    j0 = np.floor(v).astype(int) % grid.n_phi
    fv = v - np.floor(v)
    j1 = (j0 + 1) % grid.n_phi

    def ring(i, j):
        out = np.empty(i.shape)
        inner = i < 0
        out[inner] = center_value
        out[~inner] = vals[i[~inner], j[~inner]]
        return out

    lo = (1 - fv) * ring(i0, j0) + fv * ring(i0, j1)
    hi = (1 - fv) * ring(i0 + 1, j0) + fv * ring(i0 + 1, j1)
    out = (1 - fu) * lo + fu * hi
    out[beyond] = 0.0
    return out


def sample_window(field: WignerField, re_range, im_range, resolution: int,
                  center_value: float | None = None, outside: str = "error") -> CartesianRaster:
    """Resample a polar field onto a ``resolution x resolution`` raster.

    With the default ``outside="error"`` every window corner must lie inside
    the disc of radius ``r_max``; ``outside="zero"`` clamps the exterior to 0.
    """
    if outside not in ("error", "zero"):
        raise ValueError("outside must be 'error' or 'zero'")
    corners = [complex(a, b) for a in re_range for b in im_range]
    if outside == "error" and max(abs(c) for c in corners) > field.grid.r_max * (1 + 1e-12):
        raise WindowExceedsGridError(
            f"window corners reach r={max(abs(c) for c in corners):.4g} > r_max={field.grid.r_max:.4g}"
        )
    g = raster_gammas(re_range, im_range, resolution)
    vals = interpolate_polar(field, g, center_value, outside)
    return CartesianRaster(vals, tuple(re_range), tuple(im_range), field.tau)
