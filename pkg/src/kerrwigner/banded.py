"""Compressed band-diagonal matrices with pivoted LU factorization.

Storage is row-compressed: ``rows[i, k]`` holds ``A[i, i - m1 + k]`` for
``k = 0 .. m1 + m2``.  Factorization follows the classic band-diagonal
elimination with partial pivoting inside the band; afterwards the upper
factor occupies ``rows`` (diagonal in column 0, bandwidth ``m1 + m2``), the
unit-lower multipliers live in ``lower`` and the row interchanges in
``pivots``.

Cost is O(n * m1 * (m1 + m2)) for the factorization and O(n * (2 m1 + m2))
per solve, so one factorization serves an entire implicit time loop.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
from numba import njit

from .errors import BandwidthViolationError, DimensionMismatchError, SingularMatrixError

PIVOT_FLOOR = 1e-300


@dataclass(frozen=True)
class CompressedBandMatrix:
    n: int
    m1: int
    m2: int
    rows: np.ndarray
    lower: np.ndarray | None = None
    pivots: np.ndarray | None = None

    @property
    def factored(self) -> bool:
        return self.lower is not None

    @property
    def dtype(self):
        return self.rows.dtype

    def to_dense(self) -> np.ndarray:
        """Expand an unfactored matrix to a dense array (testing aid)."""
        if self.factored:
            raise ValueError("to_dense is defined for unfactored matrices only")
        dense = np.zeros((self.n, self.n), dtype=self.rows.dtype)
        for k in range(self.m1 + self.m2 + 1):
            off = k - self.m1
            i = np.arange(max(0, -off), min(self.n, self.n - off))
            dense[i, i + off] = self.rows[i, k]
        return dense

    def factors_dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(P, L, U)`` with ``P @ A = L @ U`` for a factored matrix.

        ``P`` is the accumulated row permutation.  Only meant for small n.
        """
        if not self.factored:
            raise ValueError("matrix is not factored")
        n, m1 = self.n, self.m1
        mm = self.m1 + self.m2 + 1
        U = np.zeros((n, n), dtype=self.rows.dtype)
        for i in range(n):
            w = min(mm, n - i)
            U[i, i:i + w] = self.rows[i, :w]
        # replay the elimination on the identity to obtain P and L
        perm = np.arange(n)
        L = np.eye(n, dtype=self.rows.dtype)
        mult = np.zeros((n, n), dtype=self.rows.dtype)
        for k in range(n):
            p = self.pivots[k]
            if p != k:
                perm[[k, p]] = perm[[p, k]]
                mult[[k, p], :k] = mult[[p, k], :k]
            for j in range(k + 1, min(k + m1, n - 1) + 1):
                mult[j, k] = self.lower[k, j - k - 1]
        L += mult
        P = np.eye(n, dtype=self.rows.dtype)[perm]
        return P, L, U


def _empty_rows(n, m1, m2, dtype):
    return np.zeros((n, m1 + m2 + 1), dtype=dtype)


def band_from_coo(n, m1, m2, row, col, val) -> CompressedBandMatrix:
    """Vectorized assembly from coordinate arrays; duplicates accumulate."""
    row = np.asarray(row, dtype=np.int64)
    col = np.asarray(col, dtype=np.int64)
    val = np.asarray(val)
    off = col - row
    bad = (off < -m1) | (off > m2) | (row < 0) | (row >= n) | (col < 0) | (col >= n)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise BandwidthViolationError(int(row[k]), int(col[k]), m1, m2)
    dtype = np.result_type(val.dtype, np.float64)
    rows = _empty_rows(n, m1, m2, dtype)
    np.add.at(rows, (row, off + m1), val)
    return CompressedBandMatrix(n, m1, m2, rows)


def band_from_entries(n: int, m1: int, m2: int,
                      entries: Iterable[tuple[int, int, complex]]) -> CompressedBandMatrix:
    """Build a band matrix from ``(row, col, value)`` triples."""
    entries = list(entries)
    if not entries:
        return CompressedBandMatrix(n, m1, m2, _empty_rows(n, m1, m2, np.float64))
    r, c, v = zip(*entries)
    return band_from_coo(n, m1, m2, r, c, np.asarray(v))


@njit(cache=True)
def _bandec(a, n, m1, m2, al, indx):
    # returns -1 on success, else the index of the failing pivot
    mm = m1 + m2 + 1
    shift = m1
    for i in range(min(m1, n)):
        for j in range(shift, mm):
            a[i, j - shift] = a[i, j]
        for j in range(mm - shift, mm):
            a[i, j] = 0.0
        shift -= 1
    last = min(m1, n) - 1  # elimination window never passes the last row
    for k in range(n):
        dum = a[k, 0]
        piv = k
        if last < n - 1:
            last += 1
        for j in range(k + 1, last + 1):
            if abs(a[j, 0]) > abs(dum):
                dum = a[j, 0]
                piv = j
        indx[k] = piv
        if abs(dum) < PIVOT_FLOOR:
            return k
        if piv != k:
            for j in range(mm):
                t = a[k, j]
                a[k, j] = a[piv, j]
                a[piv, j] = t
        inv = 1.0 / a[k, 0]
        for i in range(k + 1, last + 1):
            f = a[i, 0] * inv
            al[k, i - k - 1] = f
            for j in range(1, mm):
                a[i, j - 1] = a[i, j] - f * a[k, j]
            a[i, mm - 1] = 0.0
    return -1


@njit(cache=True)
def _banbks(a, n, m1, m2, al, indx, b):
    mm = m1 + m2 + 1
    last = min(m1, n) - 1  # elimination window never passes the last row
    for k in range(n):
        j = indx[k]
        if j != k:
            t = b[k]
            b[k] = b[j]
            b[j] = t
        if last < n - 1:
            last += 1
        bk = b[k]
        for j in range(k + 1, last + 1):
            b[j] -= al[k, j - k - 1] * bk
    width = 1
    for i in range(n - 1, -1, -1):
        dum = b[i]
        for k in range(1, width):
            dum -= a[i, k] * b[k + i]
        b[i] = dum / a[i, 0]
        if width < mm:
            width += 1


@njit(cache=True)
def _banmul(a, n, m1, m2, x, y):
    for i in range(n):
        lo = max(0, m1 - i)
        hi = min(m1 + m2 + 1, n + m1 - i)
        s = y[i] * 0.0
        for k in range(lo, hi):
            s += a[i, k] * x[i - m1 + k]
        y[i] = s


def band_lu_decompose(matrix: CompressedBandMatrix, overwrite: bool = False) -> CompressedBandMatrix:
    """Factor ``matrix`` with partial pivoting inside the band.

    Raises:
        SingularMatrixError: if a pivot magnitude drops below 1e-300.
    """
    if matrix.factored:
        raise ValueError("matrix is already factored")
    a = matrix.rows if overwrite else matrix.rows.copy()
    a = np.ascontiguousarray(a)
    al = np.zeros((matrix.n, max(matrix.m1, 1)), dtype=a.dtype)
    indx = np.zeros(matrix.n, dtype=np.int64)
    failed = _bandec(a, matrix.n, matrix.m1, matrix.m2, al, indx)
    if failed >= 0:
        raise SingularMatrixError(f"pivot below {PIVOT_FLOOR:g} at row {failed}")
    return replace(matrix, rows=a, lower=al, pivots=indx)


def band_solve(factors: CompressedBandMatrix, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` given the output of :func:`band_lu_decompose`."""
    if not factors.factored:
        raise ValueError("band_solve needs factors from band_lu_decompose")
    rhs = np.asarray(rhs)
    if rhs.shape != (factors.n,):
        raise DimensionMismatchError(f"rhs has shape {rhs.shape}, expected ({factors.n},)")
    b = rhs.astype(np.result_type(rhs.dtype, factors.dtype), copy=True)
    _banbks(factors.rows, factors.n, factors.m1, factors.m2, factors.lower, factors.pivots, b)
    return b


def band_matvec(matrix: CompressedBandMatrix, x) -> np.ndarray:
    """``y = A @ x`` touching only the stored bands."""
    if matrix.factored:
        raise ValueError("band_matvec needs an unfactored matrix")
    x = np.asarray(x)
    if x.shape != (matrix.n,):
        raise DimensionMismatchError(f"x has shape {x.shape}, expected ({matrix.n},)")
    dtype = np.result_type(x.dtype, matrix.dtype)
    y = np.zeros(matrix.n, dtype=dtype)
    _banmul(matrix.rows, matrix.n, matrix.m1, matrix.m2, x.astype(dtype), y)
    return y
