"""Double-double (~31 significant digits) kernels for the series oracles.

A double-double number is an unevaluated sum ``hi + lo`` of two doubles;
complex values carry four doubles.  Only the handful of operations the
series sums need are provided.  Everything here is compiled with numba and
relies on strict IEEE evaluation (no fastmath).
"""

import numpy as np
from numba import njit

_SPLIT = 134217729.0  # 2**27 + 1


@njit(inline="always")
def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(inline="always")
def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(inline="always")
def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


@njit(inline="always")
def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(inline="always")
def dd_add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    t, f = two_sum(al, bl)
    e += t
    s, e = quick_two_sum(s, e)
    e += f
    return quick_two_sum(s, e)


@njit(inline="always")
def dd_mul(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e += ah * bl + al * bh
    return quick_two_sum(p, e)


@njit(inline="always")
def dd_div_d(ah, al, b):
    q1 = ah / b
    p, e = two_prod(q1, b)
    s, f = two_sum(ah, -p)
    f = f - e + al
    q2 = (s + f) / b
    return quick_two_sum(q1, q2)


@njit(inline="always")
def cdd_mul(arh, arl, aih, ail, brh, brl, bih, bil):
    # (ar + i ai)(br + i bi)
    p1h, p1l = dd_mul(arh, arl, brh, brl)
    p2h, p2l = dd_mul(aih, ail, bih, bil)
    p3h, p3l = dd_mul(arh, arl, bih, bil)
    p4h, p4l = dd_mul(aih, ail, brh, brl)
    rh, rl = dd_add(p1h, p1l, -p2h, -p2l)
    ih, il = dd_add(p3h, p3l, p4h, p4l)
    return rh, rl, ih, il


@njit(cache=True)
def q_form_point(zr, zi, nterms, phase, expo):
    """Hermitian double sum of the q-form for one phase-space point.

    ``z = 2 conj(alpha) gamma`` (double), ``phase[q] = exp(-i tau q(q-1)/2)``
    and ``expo[d] = exp(-|alpha|^2 exp(i tau d))`` are double-double arrays of
    shape ``(n, 4)`` holding ``(re_hi, re_lo, im_hi, im_lo)``.  Returns the
    sum ``sum_{q,k} a_q conj(a_k) E_{k-q}`` as ``(hi, lo)``; it is real by
    construction since ``E_{-d} = conj(E_d)``.
    """
    a = np.zeros((nterms, 4))
    # t_q = z^q / q!, a_q = t_q * phase[q]
    th, tl, uh, ul = 1.0, 0.0, 0.0, 0.0
    for q in range(nterms):
        if q > 0:
            th, tl, uh, ul = cdd_mul(th, tl, uh, ul, zr, 0.0, zi, 0.0)
            th, tl = dd_div_d(th, tl, float(q))
            uh, ul = dd_div_d(uh, ul, float(q))
        r = cdd_mul(th, tl, uh, ul, phase[q, 0], phase[q, 1], phase[q, 2], phase[q, 3])
        a[q, 0], a[q, 1], a[q, 2], a[q, 3] = r
    # d = 0 term: E_0 is real, sum |a_q|^2
    sh, sl = 0.0, 0.0
    for q in range(nterms):
        ph, pl = dd_mul(a[q, 0], a[q, 1], a[q, 0], a[q, 1])
        sh, sl = dd_add(sh, sl, ph, pl)
        ph, pl = dd_mul(a[q, 2], a[q, 3], a[q, 2], a[q, 3])
        sh, sl = dd_add(sh, sl, ph, pl)
    sh, sl = dd_mul(sh, sl, expo[0, 0], expo[0, 1])
    for d in range(1, nterms):
        # C_d = sum_q a_q conj(a_{q+d})
        crh, crl, cih, cil = 0.0, 0.0, 0.0, 0.0
        for q in range(nterms - d):
            k = q + d
            r = cdd_mul(a[q, 0], a[q, 1], a[q, 2], a[q, 3], a[k, 0], a[k, 1], -a[k, 2], -a[k, 3])
            crh, crl = dd_add(crh, crl, r[0], r[1])
            cih, cil = dd_add(cih, cil, r[2], r[3])
        # 2 Re(E_d C_d)
        p1h, p1l = dd_mul(expo[d, 0], expo[d, 1], crh, crl)
        p2h, p2l = dd_mul(expo[d, 2], expo[d, 3], cih, cil)
        rh, rl = dd_add(p1h, p1l, -p2h, -p2l)
        sh, sl = dd_add(sh, sl, 2.0 * rh, 2.0 * rl)
    return sh, sl


@njit(cache=True)
def q_form_many(zr, zi, nterms, phase, expo, out):
    for p in range(zr.shape[0]):
        out[p, 0], out[p, 1] = q_form_point(zr[p], zi[p], nterms[p], phase, expo)


@njit(cache=True)
def deriv_form_point(xr, xi, kmax, nmax, u):
    """Sum ``sum_k (-4)^k / k! |G_k|^2`` with ``G_k = sum_j u_{j+k} x^j / j!``.

    ``x = -4 conj(gamma)`` and ``u[n] = (-alpha/2)^n exp(i tau n(n-1)/2)`` as a
    double-double array of shape ``(nmax, 4)``.
    """
    p = np.zeros((nmax, 4))
    th, tl, uh, ul = 1.0, 0.0, 0.0, 0.0
    for j in range(nmax):
        if j > 0:
            th, tl, uh, ul = cdd_mul(th, tl, uh, ul, xr, 0.0, xi, 0.0)
            th, tl = dd_div_d(th, tl, float(j))
            uh, ul = dd_div_d(uh, ul, float(j))
        p[j, 0], p[j, 1], p[j, 2], p[j, 3] = th, tl, uh, ul
    sh, sl = 0.0, 0.0
    ch, cl = 1.0, 0.0  # (-4)^k / k!
    for k in range(kmax):
        if k > 0:
            ch, cl = dd_div_d(ch * -4.0, cl * -4.0, float(k))
        grh, grl, gih, gil = 0.0, 0.0, 0.0, 0.0
        for j in range(nmax - k):
            n = j + k
            r = cdd_mul(u[n, 0], u[n, 1], u[n, 2], u[n, 3], p[j, 0], p[j, 1], p[j, 2], p[j, 3])
            grh, grl = dd_add(grh, grl, r[0], r[1])
            gih, gil = dd_add(gih, gil, r[2], r[3])
        m1h, m1l = dd_mul(grh, grl, grh, grl)
        m2h, m2l = dd_mul(gih, gil, gih, gil)
        mh, ml = dd_add(m1h, m1l, m2h, m2l)
        mh, ml = dd_mul(mh, ml, ch, cl)
        sh, sl = dd_add(sh, sl, mh, ml)
    return sh, sl


@njit(cache=True)
def deriv_form_many(xr, xi, kmax, nmax, u, out):
    for p in range(xr.shape[0]):
        out[p, 0], out[p, 1] = deriv_form_point(xr[p], xi[p], kmax[p], nmax[p], u)


def from_mpc(values) -> np.ndarray:
    """Convert a sequence of mpmath complex numbers to ``(n, 4)`` double-double."""
    import mpmath as mp

    out = np.zeros((len(values), 4))
    for i, v in enumerate(values):
        v = mp.mpc(v)
        rh = float(v.real)
        ih = float(v.imag)
        out[i] = (rh, float(v.real - rh), ih, float(v.imag - ih))
    return out
