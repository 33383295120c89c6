"""Implicit finite-difference solution of the Kerr Fokker-Planck equation.

The spatial operator L (with dW/dtau = L W) is, in polar coordinates,

    -(r^2 - 1) d_phi + (1/16) (d_r d_phi / r + d_r^2 d_phi + d_phi^3 / r^2)
    + xi + (xi/2) (r + (1/2 + N) / (2 r)) d_r
    + (xi/4) (1/2 + N) (d_r^2 + d_phi^2 / r^2)

The orientation of the first (lossless) line is the one satisfied by the
closed-form series solutions of :mod:`kerrwigner.oracles`: a coherent state
rotates towards positive phi at angular speed ~ r^2 - 1.

Every derivative uses 4th-order 5-point stencils; mixed derivatives are
tensor products of the 1-D weights.  The coefficients depend on the ring
only, so the operator is stored as one 5x5 offset table per ring.

Two linear solvers produce the same discrete solution:

* ``band``: the global system in compressed band storage (half-bandwidth
  ``3 * n_phi``), factored once, one band solve per step.
* ``azimuthal-fourier``: the system is circulant in phi, so a DFT along phi
  splits it into ``n_phi`` independent radial systems of half-bandwidth 2,
  each factored once with the same band LU.  Needed when the global band
  does not fit in memory.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .banded import (
    CompressedBandMatrix,
    _banbks,
    _bandec,
    _banmul,
    band_from_coo,
    band_lu_decompose,
    band_matvec,
    band_solve,
)
from .core import SimulationConfig, WignerField, coherent_wigner_init, phase_space_integral
from .errors import NormalizationDriftError, SingularMatrixError

log = logging.getLogger(__name__)

OFFSETS = np.arange(-2, 3)


def stencil_first_derivative(h: float) -> np.ndarray:
    """Weights on offsets -2..2: (1, -8, 0, 8, -1) / (12 h)."""
    return np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)


def stencil_second_derivative(h: float) -> np.ndarray:
    return np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)


def stencil_third_derivative(h: float) -> np.ndarray:
    return np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / (2.0 * h ** 3)


def stencil_mixed(radial: np.ndarray, azimuthal: np.ndarray) -> np.ndarray:
    """Tensor-product weights, indexed ``[di + 2, dj + 2]``."""
    return np.outer(radial, azimuthal)


def term_prefactors(r, xi: float, n_thermal: float) -> dict[str, np.ndarray]:
    """r-dependent prefactor of every derivative term of L."""
    r = np.asarray(r, dtype=float)
    noise = 0.5 + n_thermal
    return {
        "d_phi": -(r * r - 1.0),
        "d_r_d_phi": 1.0 / (16.0 * r),
        "d_rr_d_phi": np.full_like(r, 1.0 / 16.0),
        "d_phi3": 1.0 / (16.0 * r * r),
        "const": np.full_like(r, xi),
        "d_r": 0.5 * xi * (r + 0.5 * noise / r),
        "d_rr": np.full_like(r, 0.25 * xi * noise),
        "d_phiphi": 0.25 * xi * noise / (r * r),
    }


@dataclass(frozen=True)
class StencilCoefficients:
    """Offset table of L for every ring.

    ``coeffs[i, di + 2, dj + 2]`` multiplies ``W[i + di, j + dj]`` in the row of
    node ``(i, j)``; identical for all ``j``.  ``active[i]`` marks the rings that
    carry an operator row (the others are constraint rows).
    """

    config: SimulationConfig
    coeffs: np.ndarray
    active: np.ndarray
    terms: dict

    @property
    def grid(self):
        return self.config.grid


def _ring_table(pref: dict, i: int, d1r, d2r, d1p, d2p, d3p) -> np.ndarray:
    t = np.zeros((5, 5))
    centre = 2
    t[centre, :] += pref["d_phi"][i] * d1p + pref["d_phi3"][i] * d3p + pref["d_phiphi"][i] * d2p
    t += pref["d_r_d_phi"][i] * stencil_mixed(d1r, d1p)
    t += pref["d_rr_d_phi"][i] * stencil_mixed(d2r, d1p)
    t[:, centre] += pref["d_r"][i] * d1r + pref["d_rr"][i] * d2r
    t[centre, centre] += pref["const"][i]
    return t


def assemble_operator(config: SimulationConfig) -> StencilCoefficients:
    grid = config.grid
    pref = term_prefactors(grid.radii, config.xi, config.n_thermal)
    d1r, d2r = stencil_first_derivative(grid.dr), stencil_second_derivative(grid.dr)
    d1p, d2p = stencil_first_derivative(grid.dphi), stencil_second_derivative(grid.dphi)
    d3p = stencil_third_derivative(grid.dphi)
    active = np.zeros(grid.n_r, dtype=bool)
    first = 2 if config.closure == "center-pin" else 0
    active[first:grid.n_r - 2] = True
    coeffs = np.zeros((grid.n_r, 5, 5))
    for i in np.flatnonzero(active):
        coeffs[i] = _ring_table(pref, i, d1r, d2r, d1p, d2p, d3p)
    return StencilCoefficients(config, coeffs, active, pref)


@dataclass(frozen=True)
class IndexMap:
    n_r: int
    n_phi: int

    def index(self, i, j):
        return self.n_phi * np.asarray(i) + np.mod(j, self.n_phi)

    def inverse(self, k):
        return np.divmod(k, self.n_phi)

    @property
    def size(self) -> int:
        return self.n_r * self.n_phi

    @property
    def half_bandwidth(self) -> int:
        return 3 * self.n_phi


def _ghost_target(closure: str, n_phi: int, ring: int, j: np.ndarray):
    """Where a stencil reference to ring ``ring < 0`` lands.

    Returns ``None`` for the origin (prescribed centre value) or the
    ``(ring, angle index)`` it is reflected onto.
    """
    if ring == -1 or closure == "center-ghost":
        return None
    # r = -dr is the node at r = dr on the opposite side of the origin
    if n_phi % 2:
        raise ValueError("the reflect closure needs an even n_phi")
    return 0, (j + n_phi // 2) % n_phi


def operator_coo(op: StencilCoefficients):
    """Global operator L as COO arrays plus the origin-ghost column.

    Returns ``(row, col, val, ghost)`` where ``ghost[k]`` is the coefficient that
    multiplies the prescribed centre value W(tau, 0, 0) in row ``k``.
    """
    grid = op.grid
    n_r, n_phi = grid.shape
    imap = IndexMap(n_r, n_phi)
    j = np.arange(n_phi)
    rows, cols, vals = [], [], []
    ghost = np.zeros(imap.size)
    for i in np.flatnonzero(op.active):
        table = op.coeffs[i]
        row = imap.index(i, j)
        for a, di in enumerate(OFFSETS):
            for b, dj in enumerate(OFFSETS):
                c = table[a, b]
                if c == 0.0:
                    continue
                ring = i + di
                if ring >= 0:
                    rows.append(row)
                    cols.append(imap.index(ring, j + dj))
                    vals.append(np.full(n_phi, c))
                    continue
                target = _ghost_target(op.config.closure, n_phi, ring, (j + dj) % n_phi)
                if target is None:
                    ghost[row] += c
                else:
                    rows.append(row)
                    cols.append(imap.index(target[0], target[1]))
                    vals.append(np.full(n_phi, c))
    if rows:
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), ghost
    empty = np.zeros(0, dtype=np.int64)
    return empty, empty, np.zeros(0), ghost


def constraint_rows(op: StencilCoefficients) -> np.ndarray:
    """Linear indices of rows pinned to a prescribed value."""
    n_phi = op.grid.n_phi
    rings = np.flatnonzero(~op.active)
    return (rings[:, None] * n_phi + np.arange(n_phi)[None, :]).ravel()


def assemble_system_matrix(op: StencilCoefficients, dtau: float, index_map: IndexMap,
                           theta: float = 1.0) -> CompressedBandMatrix:
    """Band matrix ``I - theta * dtau * L`` with identity constraint rows."""
    row, col, val, _ = operator_coo(op)
    n = index_map.size
    m = index_map.half_bandwidth
    diag = np.arange(n)
    return band_from_coo(
        n, m, m,
        np.concatenate([diag, row]),
        np.concatenate([diag, col]),
        np.concatenate([np.ones(n), -theta * dtau * val]),
    )


def explicit_matrix(op: StencilCoefficients, dtau: float, index_map: IndexMap,
                    theta: float) -> CompressedBandMatrix:
    """Band matrix ``I + (1 - theta) * dtau * L`` (operator rows only)."""
    row, col, val, _ = operator_coo(op)
    n = index_map.size
    m = index_map.half_bandwidth
    rows = np.flatnonzero(np.repeat(op.active, op.grid.n_phi))
    return band_from_coo(
        n, m, m,
        np.concatenate([rows, row]),
        np.concatenate([rows, col]),
        np.concatenate([np.ones(rows.size), (1.0 - theta) * dtau * val]),
    )


def boundary_values(op: StencilCoefficients, tau: float,
                    center_value: Callable[[float], float] | None = None) -> np.ndarray:
    """Prescribed value of every constraint row at ``tau``.

    Outer two rings are held at 0; with the ``center-pin`` closure the two
    innermost rings carry the centre value.
    """
    cv = op.config.center_value if center_value is None else center_value
    grid = op.grid
    per_ring = np.zeros(grid.n_r)
    inner = np.flatnonzero(~op.active)
    inner = inner[inner < 2]
    per_ring[inner] = cv(tau)
    return np.repeat(per_ring[~op.active], grid.n_phi)


def apply_boundary_conditions(matrix: CompressedBandMatrix, rhs: np.ndarray, config: SimulationConfig,
                              tau: float, op: StencilCoefficients | None = None,
                              center_value: Callable[[float], float] | None = None):
    """Pin constraint rows of ``matrix`` and write their values into ``rhs``.

    The matrix part is only touched when it is unfactored; the rhs part is
    what changes from step to step.
    """
    op = op if op is not None else assemble_operator(config)
    pinned = constraint_rows(op)
    rhs = np.array(rhs, dtype=float, copy=True)
    rhs[pinned] = boundary_values(op, tau, center_value)
    if not matrix.factored:
        rows = matrix.rows.copy()
        rows[pinned, :] = 0.0
        rows[pinned, matrix.m1] = 1.0
        matrix = CompressedBandMatrix(matrix.n, matrix.m1, matrix.m2, rows)
    return matrix, rhs


# ----------------------------------------------------------------------------
# azimuthal Fourier decomposition of the same system


def mode_operator(op: StencilCoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Radial band rows of L for each azimuthal mode.

    Returns ``(bands, ghost)``: ``bands[m, i, di + 2]`` multiplies mode ``m`` of
    ring ``i + di`` in the row of ring ``i`` (numpy FFT ordering of ``m``), and
    ``ghost[i]`` is the origin coefficient (it only feeds mode 0).
    """
    grid = op.grid
    n_r, n_phi = grid.shape
    m = np.fft.fftfreq(n_phi, 1.0 / n_phi)
    shift = np.exp(2j * np.pi * np.outer(m, OFFSETS) / n_phi)  # (n_phi, 5)
    bands = np.zeros((n_phi, n_r, 5), dtype=complex)
    ghost = np.zeros(n_r)
    for i in np.flatnonzero(op.active):
        sym = shift @ op.coeffs[i].T  # (n_phi, 5) over di
        for a, di in enumerate(OFFSETS):
            ring = i + di
            if ring >= 0:
                bands[:, i, a] += sym[:, a]
                continue
            target = _ghost_target(op.config.closure, n_phi, ring, np.zeros(1, dtype=int))
            if target is None:
                ghost[i] += op.coeffs[i][a].sum()
            else:
                # reflected onto ring 0, half a turn away
                bands[:, i, 2 - i] += sym[:, a] * np.exp(1j * np.pi * m)
    return bands, ghost


@njit(cache=True)
def _factor_stack(a, al, indx, n, m1, m2):
    for s in range(a.shape[0]):
        if _bandec(a[s], n, m1, m2, al[s], indx[s]) >= 0:
            return s
    return -1


@njit(cache=True)
def _matvec_stack(b, n, m1, m2, x, out):
    for s in range(b.shape[0]):
        _banmul(b[s], n, m1, m2, x[s], out[s])


@njit(cache=True)
def _solve_stack(a, al, indx, n, m1, m2, rhs):
    for s in range(a.shape[0]):
        _banbks(a[s], n, m1, m2, al[s], indx[s], rhs[s])


class _FourierSolver:
    def __init__(self, op: StencilCoefficients, dtau: float, theta: float):
        n_r, n_phi = op.grid.shape
        bands, ghost = mode_operator(op)
        eye = np.zeros((n_r, 5), dtype=complex)
        eye[:, 2] = 1.0
        keep = op.active[None, :, None]
        self.a = np.ascontiguousarray(np.where(keep, eye[None] - theta * dtau * bands, eye[None]))
        self.b = np.ascontiguousarray(np.where(keep, eye[None] + (1 - theta) * dtau * bands, 0.0))
        self.al = np.zeros((n_phi, n_r, 2), dtype=complex)
        self.indx = np.zeros((n_phi, n_r), dtype=np.int64)
        failed = _factor_stack(self.a, self.al, self.indx, n_r, 2, 2)
        if failed >= 0:
            raise SingularMatrixError(f"azimuthal mode {failed} is singular")
        self.ghost = ghost
        self.n_r, self.n_phi = n_r, n_phi
        self.pinned_rings = np.flatnonzero(~op.active)

    def step(self, values: np.ndarray, ghost_value: float, pinned: np.ndarray) -> np.ndarray:
        modes = np.ascontiguousarray(np.fft.fft(values, axis=1).T)
        rhs = np.zeros_like(modes)
        _matvec_stack(self.b, self.n_r, 2, 2, modes, rhs)
        rhs[0] += self.n_phi * ghost_value * self.ghost
        rhs[:, self.pinned_rings] = np.fft.fft(pinned.reshape(-1, self.n_phi), axis=1).T
        _solve_stack(self.a, self.al, self.indx, self.n_r, 2, 2, rhs)
        return np.fft.ifft(rhs.T, axis=1).real


class _BandSolver:
    def __init__(self, op: StencilCoefficients, dtau: float, theta: float):
        grid = op.grid
        imap = IndexMap(*grid.shape)
        self.explicit = explicit_matrix(op, dtau, imap, theta)
        _, _, _, ghost = operator_coo(op)
        self.ghost = ghost
        system = assemble_system_matrix(op, dtau, imap, theta)
        system, _ = apply_boundary_conditions(system, np.zeros(imap.size), op.config, 0.0, op)
        self.factors = band_lu_decompose(system, overwrite=True)
        self.pinned = constraint_rows(op)
        self.shape = grid.shape

    def step(self, values: np.ndarray, ghost_value: float, pinned: np.ndarray) -> np.ndarray:
        rhs = band_matvec(self.explicit, values.reshape(-1))
        rhs += ghost_value * self.ghost
        rhs[self.pinned] = pinned
        return band_solve(self.factors, rhs).reshape(self.shape)


class Evolution:
    """Time stepper: factor once, then one solve per step.

    ``audit`` collects ``(tau, integral)`` after every step.
    """

    def __init__(self, config: SimulationConfig, initial: WignerField | None = None,
                 center_value: Callable[[float], float] | None = None):
        self.config = config
        self.op = assemble_operator(config)
        self.center_value = config.center_value if center_value is None else center_value
        field = initial if initial is not None else coherent_wigner_init(config.alpha, config.grid)
        if field.grid != config.grid:
            raise ValueError("initial field grid differs from the configured grid")
        values = np.array(field.values)
        values[~self.op.active] = 0.0
        if self.config.closure == "center-pin":
            values[:2] = self.center_value(field.tau)
        self.values = values
        self.tau0 = field.tau
        self.step_index = 0
        self.audit: list[tuple[float, float]] = []
        solver_cls = _BandSolver if config.solver == "band" else _FourierSolver
        self._solver = solver_cls(self.op, config.dtau, config.theta)

    @property
    def tau(self) -> float:
        return self.tau0 + self.step_index * self.config.dtau

    def field(self) -> WignerField:
        return WignerField(self.config.grid, self.values, self.tau)

    def step(self) -> np.ndarray:
        cfg = self.config
        t_old, t_new = self.tau, self.tau + cfg.dtau
        theta = cfg.theta
        ghost_value = cfg.dtau * (theta * self.center_value(t_new) + (1 - theta) * self.center_value(t_old))
        pinned = boundary_values(self.op, t_new, self.center_value)
        self.values = self._solver.step(self.values, ghost_value, pinned)
        self.step_index += 1
        integral = phase_space_integral(WignerField(cfg.grid, self.values, self.tau))
        self.audit.append((self.tau, integral))
        tol = cfg.drift_tolerance
        if tol is not None and abs(integral - 1.0) > tol:
            raise NormalizationDriftError(self.tau, integral, tol)
        return self.values


def _snapshot_steps(taus: Sequence[float], tau0: float, dtau: float, tau_end: float) -> list[int]:
    steps = []
    for t in taus:
        k = (t - tau0) / dtau
        if abs(k - round(k)) > 1e-6 or t < tau0 - 1e-12 or t > tau_end + 1e-9:
            raise ValueError(f"snapshot tau={t} is not a multiple of dtau within [tau0, tau_end]")
        steps.append(int(round(k)))
    return steps


def evolve(config: SimulationConfig, tau_end: float, snapshot_taus: Sequence[float] = (),
           initial: WignerField | None = None,
           center_value: Callable[[float], float] | None = None,
           on_step: Callable[[float, np.ndarray], None] | None = None) -> list[WignerField]:
    """Evolve from the coherent state (or ``initial``) up to ``tau_end``.

    Returns the fields at ``snapshot_taus`` in the order given.  On a
    normalization failure the :class:`NormalizationDriftError` carries the
    snapshots recorded so far in ``.fields``.
    """
    if tau_end <= 0:
        raise ValueError("tau_end must be positive")
    ev = Evolution(config, initial, center_value)
    n_steps = int(round((tau_end - ev.tau0) / config.dtau))
    wanted = _snapshot_steps(snapshot_taus, ev.tau0, config.dtau, tau_end)
    recorded: dict[int, WignerField] = {}
    if 0 in wanted:
        recorded[0] = ev.field()
    try:
        for _ in range(n_steps):
            ev.step()
            if on_step is not None:
                on_step(ev.tau, ev.values)
            if ev.step_index in wanted:
                recorded[ev.step_index] = ev.field()
    except NormalizationDriftError as exc:
        exc.fields = [recorded[k] for k in sorted(recorded)]
        raise
    return [recorded[k] for k in wanted]
