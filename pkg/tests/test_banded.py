import time

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from kerrwigner.banded import (
    CompressedBandMatrix,
    band_from_coo,
    band_from_entries,
    band_lu_decompose,
    band_matvec,
    band_solve,
)
from kerrwigner.errors import BandwidthViolationError, DimensionMismatchError, SingularMatrixError


def random_band(rng, n, m1, m2, dominant=True, dtype=float):
    entries = []
    for i in range(n):
        for j in range(max(0, i - m1), min(n, i + m2 + 1)):
            v = rng.standard_normal()
            if dtype is complex:
                v = v + 1j * rng.standard_normal()
            entries.append((i, j, v))
    A = band_from_entries(n, m1, m2, entries)
    if dominant:
        dense = A.to_dense()
        rows = A.rows.copy()
        rows[:, m1] += np.abs(dense).sum(axis=1) + 1.0
        A = CompressedBandMatrix(n, m1, m2, rows)
    return A


def test_identity_from_entries():
    A = band_from_entries(3, 0, 0, [(i, i, 1.0) for i in range(3)])
    np.testing.assert_array_equal(A.to_dense(), np.eye(3))


def test_entry_outside_band_is_rejected():
    with pytest.raises(BandwidthViolationError) as exc:
        band_from_entries(3, 0, 1, [(0, 2, 1.0)])
    assert (exc.value.row, exc.value.col) == (0, 2)


def test_duplicates_accumulate():
    A = band_from_entries(2, 1, 1, [(0, 1, 1.5), (0, 1, 2.0)])
    assert A.to_dense()[0, 1] == 3.5


def test_second_difference_stencil_is_tridiagonal():
    n = 5
    entries = [(i, i + d, w) for i in range(n) for d, w in ((-1, 1.0), (0, -2.0), (1, 1.0))
               if 0 <= i + d < n]
    A = band_from_entries(n, 1, 1, entries)
    direct = np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    np.testing.assert_array_equal(A.to_dense(), direct)


def test_identity_factors():
    A = band_from_entries(4, 1, 1, [(i, i, 1.0) for i in range(4)])
    P, L, U = band_lu_decompose(A).factors_dense()
    np.testing.assert_array_equal(L, np.eye(4))
    np.testing.assert_array_equal(U, np.eye(4))
    b = np.arange(4.0)
    np.testing.assert_array_equal(band_solve(band_lu_decompose(A), b), b)


def test_factors_recompose_input():
    rng = np.random.default_rng(1)
    A = random_band(rng, 50, 3, 3)
    P, L, U = band_lu_decompose(A).factors_dense()
    dense = A.to_dense()
    assert np.abs(P @ dense - L @ U).max() <= 1e-12 * np.abs(dense).max()


def test_pivoting_handles_zero_diagonal():
    dense = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 2.0]])
    A = band_from_coo(3, 1, 1, *np.nonzero(dense), dense[np.nonzero(dense)])
    x = band_solve(band_lu_decompose(A), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(dense @ x, [1.0, 2.0, 3.0], atol=1e-14)


def test_zero_row_is_singular():
    entries = [(i, i, 1.0) for i in range(4) if i != 2]
    A = band_from_entries(4, 1, 1, entries)
    with pytest.raises(SingularMatrixError):
        band_lu_decompose(A)


def test_manufactured_solution():
    rng = np.random.default_rng(2)
    A = random_band(rng, 50, 4, 2)
    x_true = rng.standard_normal(50)
    b = band_matvec(A, x_true)
    x = band_solve(band_lu_decompose(A), b)
    assert np.linalg.norm(x - x_true) <= 1e-10 * np.linalg.norm(x_true)


def test_tridiagonal_matches_dense():
    n = 10
    entries = [(i, i + d, w) for i in range(n) for d, w in ((-1, -1.0), (0, 2.0), (1, -1.0))
               if 0 <= i + d < n]
    A = band_from_entries(n, 1, 1, entries)
    x = band_solve(band_lu_decompose(A), np.ones(n))
    np.testing.assert_allclose(x, np.linalg.solve(A.to_dense(), np.ones(n)), rtol=1e-12)


def test_solve_dimension_mismatch():
    A = band_lu_decompose(band_from_entries(3, 0, 0, [(i, i, 1.0) for i in range(3)]))
    with pytest.raises(DimensionMismatchError):
        band_solve(A, np.ones(4))


def test_matvec_identity_zero_and_random():
    eye = band_from_entries(5, 1, 1, [(i, i, 1.0) for i in range(5)])
    x = np.arange(5.0)
    np.testing.assert_array_equal(band_matvec(eye, x), x)
    zero = band_from_entries(5, 1, 1, [])
    np.testing.assert_array_equal(band_matvec(zero, x), np.zeros(5))
    rng = np.random.default_rng(3)
    A = random_band(rng, 100, 5, 3, dominant=False)
    y = rng.standard_normal(100)
    np.testing.assert_allclose(band_matvec(A, y), A.to_dense() @ y, rtol=0, atol=1e-13 * 10)
    with pytest.raises(DimensionMismatchError):
        band_matvec(A, np.ones(3))


def test_complex_systems():
    rng = np.random.default_rng(4)
    A = random_band(rng, 40, 2, 2, dtype=complex)
    b = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    x = band_solve(band_lu_decompose(A), b)
    np.testing.assert_allclose(A.to_dense() @ x, b, atol=1e-12)


@settings(max_examples=120, deadline=None)
@given(n=st.integers(2, 200), m1=st.integers(0, 6), m2=st.integers(0, 6), seed=st.integers(0, 2**32 - 1))
def test_band_solve_matches_dense_lu(n, m1, m2, seed):
    rng = np.random.default_rng(seed)
    A = random_band(rng, n, m1, m2)
    b = rng.standard_normal(n)
    x = band_solve(band_lu_decompose(A), b)
    ref = scipy.linalg.lu_solve(scipy.linalg.lu_factor(A.to_dense()), b)
    assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)
    # residual through the band product
    assert np.linalg.norm(band_matvec(A, x) - b) <= 1e-9 * np.linalg.norm(b)


def _factor_time(n, m, reps=3):
    rng = np.random.default_rng(0)
    rows = rng.standard_normal((n, 2 * m + 1))
    rows[:, m] += 2 * m + 2  # diagonally dominant
    A = CompressedBandMatrix(n, m, m, rows)
    best = np.inf
    for _ in range(reps):
        t = time.perf_counter()
        band_lu_decompose(A)
        best = min(best, time.perf_counter() - t)
    return best


def test_factorization_scales_linearly_in_n():
    _factor_time(200, 4, reps=1)  # warm the compiled kernel
    t1 = _factor_time(20000, 30)
    t2 = _factor_time(40000, 30)
    assert t2 / t1 <= 2.5
