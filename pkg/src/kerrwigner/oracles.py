"""Closed-form Wigner and Q functions of a Kerr-evolved coherent state.

Lossless case only.  Two algebraically equal series give W(tau, gamma):

* the *q-form*, a double sum ``sum_{q,k} a_q conj(a_k) E_{k-q}`` with
  ``a_q = (2 conj(alpha) gamma)^q / q! * exp(-i tau q(q-1)/2)`` and
  ``E_d = exp(-|alpha|^2 exp(i tau d))``, multiplied by
  ``(2/pi) exp(-2|gamma|^2 - |alpha|^2)``;
* the *derivative form*, a double sum over derivatives of
  ``exp(-4|gamma|^2)``.  The derivative product is expanded with the exact
  identity

      d^n d*^m exp(-4|g|^2) = exp(-4|g|^2) sum_k C(n,k) m!/(m-k)! (-4)^k (-4g)^(m-k) (-4g*)^(n-k)

  which factorizes the sum into ``sum_k (-4)^k/k! |G_k|^2``.

Both sums cancel heavily: partial sums reach ``exp(4|alpha||gamma| - 2|gamma|^2)``
while W stays below 2/pi.  Engines:

``double``         numpy, fine while the cancellation factor is below ~1e4
``double-double``  numba kernels, about 31 significant digits
``mpmath``         literal double loops at arbitrary precision (slow, reference)

Truncation is adaptive: each point gets the smallest term count whose
rigorous tail bound is below ``SeriesPolicy.tail_tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from . import _dd
from .core import TWO_OVER_PI, CartesianRaster, raster_gammas
from .errors import InsufficientTermsError, PrecisionTooLowError

LOG10_E = math.log10(math.e)
_DOUBLE_SAFE_DIGITS = 4.0  # cancellation (decimal digits) tolerated by plain doubles
_DD_DIGITS = 31


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation ceilings and arithmetic precision for the series oracles.

    ``max_terms_*`` cap the adaptive per-point term count; exceeding a cap
    raises :class:`InsufficientTermsError`.  ``precision_digits`` up to 31 is
    served by double-double arithmetic, higher values switch to mpmath.
    """

    max_terms_q_form: int = 500
    max_terms_deriv_form: int = 400
    precision_digits: int = 30
    tail_tolerance: float = 1e-20

    def __post_init__(self):
        if self.max_terms_q_form < 1 or self.max_terms_deriv_form < 1:
            raise ValueError("term ceilings must be positive")
        if not 0 < self.tail_tolerance < 1:
            raise ValueError("tail_tolerance must lie in (0, 1)")


def default_window(alpha: complex) -> tuple[float, float]:
    """Symmetric plotting window: [-5, 5] up to |alpha| = 3.125, then 1.6|alpha|."""
    h = max(5.0, 1.6 * abs(alpha))
    return (-h, h)


# ---------------------------------------------------------------- bounds

def _log_tail(y: np.ndarray, n: int) -> np.ndarray:
    """log of sum_{j>=n} y^j/j!, bounded by a geometric majorant (or by e^y)."""
    y = np.asarray(y, dtype=float)
    n = np.asarray(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(n == 0, 0.0, n * np.log(y)) - gammaln(n + 1)
    ratio = y / (n + 1)
    geometric = lead - np.log1p(-np.minimum(ratio, 0.5))
    return np.where(ratio < 0.5, geometric, y)


def cancellation_digits(alpha: complex, gamma) -> np.ndarray:
    """Decimal digits lost to cancellation: log10 of the partial-sum scale."""
    a = abs(alpha)
    g = np.abs(np.asarray(gamma))
    return np.maximum(0.0, (4 * a * g - 2 * g * g) * LOG10_E + math.log10(TWO_OVER_PI))


def _terms_needed(log_error, start: int, ceiling: int, tol: float, label: str) -> np.ndarray:
    """Smallest n >= start per point with ``log_error(n) < log(tol)``."""
    target = math.log(tol)
    need = None
    n = start
    while n <= ceiling:
        err = log_error(n)
        if need is None:
            need = np.full(err.shape, -1, dtype=np.int64)
        hit = (need < 0) & (err < target)
        need[hit] = n
        if np.all(need >= 0):
            return need
        n += 1
    raise InsufficientTermsError(
        f"{label}: tail above {tol:g} after the {ceiling}-term ceiling; raise the policy limit"
    )


def q_form_terms(alpha: complex, gamma, policy: SeriesPolicy) -> np.ndarray:
    """Per-point truncation order for the q-form."""
    g = np.abs(np.atleast_1d(np.asarray(gamma))).ravel()
    x = 2 * abs(alpha) * g
    # |E_d| <= e^{|alpha|^2}; error <= (2/pi) e^{-2|g|^2} * 3 e^x T(x, N)
    base = math.log(3 * TWO_OVER_PI) - 2 * g * g + x
    return _terms_needed(lambda n: base + _log_tail(x, n), 1, policy.max_terms_q_form,
                         policy.tail_tolerance, "q-form")


def deriv_form_terms(alpha: complex, gamma, policy: SeriesPolicy) -> np.ndarray:
    """Per-point truncation order ``N`` (series index n < N) for the derivative form."""
    a2 = abs(alpha) ** 2
    g = np.abs(np.atleast_1d(np.asarray(gamma))).ravel()
    y = 2 * abs(alpha) * g
    logp = math.log(TWO_OVER_PI) - 2 * g * g - a2

    def log_error(n):
        # G_k truncated at j < n - k: sum_k |alpha|^{2k}/k! * 3 e^y T(y, n-k), plus k >= n
        k = np.arange(n)
        ck = k * math.log(a2) - gammaln(k + 1) if a2 > 0 else np.where(k == 0, 0.0, -np.inf)
        inner = ck[None, :] + _log_tail(y[:, None], (n - k)[None, :])
        body = math.log(3) + y + np.logaddexp.reduce(inner, axis=1)
        rest = 2 * y + (_log_tail(np.array(a2), n) if a2 > 0 else -np.inf)
        return logp + np.logaddexp(body, rest)

    return _terms_needed(log_error, 1, policy.max_terms_deriv_form, policy.tail_tolerance,
                         "derivative form")


# ---------------------------------------------------------------- helpers

def _as_points(gamma):
    arr = np.asarray(gamma, dtype=complex)
    return arr, arr.ravel()


def _shape_out(values: np.ndarray, arr: np.ndarray):
    out = values.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def _check_precision(alpha: complex, gamma_flat: np.ndarray, policy: SeriesPolicy) -> None:
    lost = float(cancellation_digits(alpha, gamma_flat).max(initial=0.0))
    required = math.ceil(lost) + 3
    if abs(alpha) <= 5:
        required = max(required, 25)
    if policy.precision_digits < required:
        raise PrecisionTooLowError(
            f"q-form at |alpha|={abs(alpha):.3g} needs at least {required} significant digits, "
            f"policy gives {policy.precision_digits}"
        )


def _dd_table(values) -> np.ndarray:
    return _dd.from_mpc(values)


def _choose_engine(engine: str, alpha, gamma_flat, policy, allow_double: bool) -> str:
    if engine != "auto":
        if engine not in ("double", "double-double", "mpmath"):
            raise ValueError(f"unknown engine {engine!r}")
        return engine
    if policy.precision_digits > _DD_DIGITS:
        return "mpmath"
    lost = float(cancellation_digits(alpha, gamma_flat).max(initial=0.0))
    if allow_double and lost <= _DOUBLE_SAFE_DIGITS:
        return "double"
    return "double-double"


# ---------------------------------------------------------------- q-form

def wigner_series_q(alpha: complex, tau: float, gamma, policy: SeriesPolicy = SeriesPolicy(),
                    engine: str = "auto"):
    """Wigner function from the q-form double sum (extended precision).

    ``gamma`` may be a scalar or an array; the return value matches its shape.

    Raises:
        PrecisionTooLowError: the policy's digits cannot absorb the cancellation.
        InsufficientTermsError: the tail bound needs more than ``max_terms_q_form`` terms.
    """
    alpha = complex(alpha)
    arr, flat = _as_points(gamma)
    _check_precision(alpha, flat, policy)
    nterms = q_form_terms(alpha, flat, policy)
    kind = _choose_engine(engine, alpha, flat, policy, allow_double=False)
    if kind == "mpmath":
        vals = np.array([_q_form_mp(alpha, tau, g, int(n), policy.precision_digits)
                         for g, n in zip(flat, nterms)])
        return _shape_out(vals, arr)
    if kind == "double":
        raise ValueError("the q-form is only evaluated in extended precision")
    nmax = int(nterms.max(initial=1))
    with mp.workdps(40):
        t = mp.mpf(tau)
        phase = _dd_table([mp.expj(-t * q * (q - 1) / 2) for q in range(nmax)])
        expo = _dd_table([mp.exp(-abs(mp.mpc(alpha)) ** 2 * mp.expj(t * d)) for d in range(nmax)])
    z = 2 * np.conj(alpha) * flat
    out = np.zeros((flat.size, 2))
    _dd.q_form_many(np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag),
                    nterms, phase, expo, out)
    pref = TWO_OVER_PI * np.exp(-2 * np.abs(flat) ** 2 - abs(alpha) ** 2)
    return _shape_out(pref * (out[:, 0] + out[:, 1]), arr)


def _q_form_mp(alpha: complex, tau: float, gamma: complex, nterms: int, digits: int) -> float:
    """Literal double loop over (q, k) at ``digits`` precision, with residue check."""
    with mp.workdps(digits):
        al, g, t = mp.mpc(alpha), mp.mpc(gamma), mp.mpf(tau)
        z = 2 * mp.conj(al) * g
        a = [z ** q / mp.factorial(q) * mp.expj(-t * q * (q - 1) / 2) for q in range(nterms)]
        b = [mp.conj(v) for v in a]
        expo = {d: mp.exp(-abs(al) ** 2 * mp.expj(t * d)) for d in range(-nterms + 1, nterms)}
        s = mp.mpc(0)
        for q in range(nterms):
            for k in range(nterms):
                s += a[q] * b[k] * expo[k - q]
        w = TWO_OVER_PI * mp.exp(-2 * abs(g) ** 2 - abs(al) ** 2) * s
        if abs(w.imag) >= 1e-10:
            raise PrecisionTooLowError(f"imaginary residue {float(abs(w.imag)):.3g} at gamma={gamma}")
        return float(w.real)


# ---------------------------------------------------------------- derivative form

def _u_coefficients(alpha: complex, tau: float, nmax: int):
    """u_n = (-alpha/2)^n exp(i tau n(n-1)/2) as mpmath numbers."""
    al, t = mp.mpc(alpha), mp.mpf(tau)
    return [(-al / 2) ** n * mp.expj(t * n * (n - 1) / 2) for n in range(nmax)]


def wigner_series_deriv(alpha: complex, tau: float, gamma, policy: SeriesPolicy = SeriesPolicy(),
                        engine: str = "auto"):
    """Wigner function from the derivative-form double sum.

    The derivative product uses the exact binomial/falling-factorial
    identity; no numerical differentiation is involved.  Plain doubles are
    used while the cancellation stays below about four digits, double-double
    otherwise.

    Raises:
        InsufficientTermsError: the tail bound needs more than ``max_terms_deriv_form`` terms.
    """
    alpha = complex(alpha)
    arr, flat = _as_points(gamma)
    nterms = deriv_form_terms(alpha, flat, policy)
    kind = _choose_engine(engine, alpha, flat, policy, allow_double=True)
    if kind == "mpmath":
        vals = np.array([_deriv_form_mp(alpha, tau, g, int(n), max(policy.precision_digits, 30))
                         for g, n in zip(flat, nterms)])
        return _shape_out(vals, arr)
    nmax = int(nterms.max(initial=1))
    pref = TWO_OVER_PI * np.exp(-2 * np.abs(flat) ** 2 - abs(alpha) ** 2)
    if kind == "double":
        return _shape_out(pref * _deriv_sum_double(alpha, tau, flat, nmax), arr)
    with mp.workdps(40):
        u = _dd_table(_u_coefficients(alpha, tau, nmax))
    x = -4 * np.conj(flat)
    out = np.zeros((flat.size, 2))
    _dd.deriv_form_many(np.ascontiguousarray(x.real), np.ascontiguousarray(x.imag),
                        nterms, nterms, u, out)
    return _shape_out(pref * (out[:, 0] + out[:, 1]), arr)


def _deriv_sum_double(alpha: complex, tau: float, flat: np.ndarray, nmax: int) -> np.ndarray:
    n = np.arange(nmax)
    logu = n * math.log(abs(alpha) / 2) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
    u = np.exp(logu + 1j * (n * math.pi + n * np.angle(alpha) + tau * n * (n - 1) / 2))
    u[n == 0] = 1.0
    x = -4 * np.conj(flat)
    # p[j, point] = x^j / j!, via logs to stay finite
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(np.abs(x))
        p = np.exp(n[:, None] * logx[None, :] - gammaln(n + 1)[:, None]
                   + 1j * n[:, None] * np.angle(x)[None, :])
    p[0] = 1.0
    total = np.zeros(flat.size)
    for k in range(nmax):
        gk = u[k:] @ p[: nmax - k]
        total += (-4.0) ** k / math.factorial(k) * np.abs(gk) ** 2 if k < 170 else 0.0
    return total


def _deriv_form_mp(alpha: complex, tau: float, gamma: complex, nterms: int, digits: int) -> float:
    """Literal sum over (n, m) with the derivative identity expanded term by term."""
    with mp.workdps(digits):
        al, g = mp.mpc(alpha), mp.mpc(gamma)
        u = _u_coefficients(alpha, tau, nterms)
        fac = [mp.factorial(i) for i in range(nterms)]
        xg, xgc = -4 * g, -4 * mp.conj(g)
        s = mp.mpc(0)
        for n in range(nterms):
            for m in range(nterms):
                d = mp.mpc(0)
                for k in range(min(n, m) + 1):
                    d += mp.binomial(n, k) * fac[m] / fac[m - k] * (-4) ** k * xg ** (m - k) * xgc ** (n - k)
                s += u[n] * mp.conj(u[m]) / (fac[n] * fac[m]) * d
        w = TWO_OVER_PI * mp.exp(-2 * abs(g) ** 2 - abs(al) ** 2) * s
        return float(w.real)


def derivative_identity(n: int, m: int, gamma: complex) -> complex:
    """``d^n d*^m exp(-4|gamma|^2)`` from the closed-form identity (double precision)."""
    g = complex(gamma)
    s = 0j
    for k in range(min(n, m) + 1):
        s += (math.comb(n, k) * math.perm(m, k) * (-4.0) ** k
              * (-4 * g) ** (m - k) * (-4 * g.conjugate()) ** (n - k))
    return s * math.exp(-4 * abs(g) ** 2)


# ---------------------------------------------------------------- Fock part and Q

def fock_number_wigner(n: int, gamma) -> np.ndarray:
    """Wigner function of the Fock state |n>: (2/pi)(-1)^n L_n(4|g|^2) e^{-2|g|^2}."""
    y = 4 * np.abs(np.asarray(gamma)) ** 2
    l_prev, l_cur = np.zeros_like(y), np.ones_like(y)
    for k in range(n):
        l_prev, l_cur = l_cur, ((2 * k + 1 - y) * l_cur - k * l_prev) / (k + 1)
    return TWO_OVER_PI * (-1) ** n * l_cur * np.exp(-y / 2)


def poisson_terms(alpha: complex, tail: float = 1e-15) -> int:
    """Smallest n_max with Poisson(|alpha|^2) mass beyond n_max below ``tail``."""
    mu = abs(alpha) ** 2
    n = int(mu)
    while poisson.sf(n, mu) >= tail:
        n += 1
    return n


def fock_static_part(alpha: complex, gamma, n_max: int | None = None):
    """Time-independent component: sum_n P_n W_{|n><n|}(gamma), P_n Poissonian.

    Raises:
        InsufficientTermsError: the Poisson tail beyond ``n_max`` exceeds 1e-15.
    """
    mu = abs(alpha) ** 2
    if n_max is None:
        n_max = poisson_terms(alpha)
    elif mu > 0 and poisson.sf(n_max, mu) >= 1e-15:
        raise InsufficientTermsError(f"Poisson tail beyond n_max={n_max} exceeds 1e-15")
    arr = np.asarray(gamma, dtype=complex)
    y = 4 * np.abs(arr) ** 2
    total = np.zeros(arr.shape)
    l_prev, l_cur = np.zeros_like(y), np.ones_like(y)
    for n in range(n_max + 1):
        if n > 0:
            l_prev, l_cur = l_cur, ((2 * n - 1 - y) * l_cur - (n - 1) * l_prev) / n
        logw = -mu + (n * math.log(mu) if mu > 0 else (0.0 if n == 0 else -np.inf)) - gammaln(n + 1)
        total += math.exp(logw) * (-1) ** n * l_cur
    out = TWO_OVER_PI * total * np.exp(-y / 2)
    return float(out) if out.ndim == 0 else out


def q_function(alpha: complex, tau: float, gamma, policy: SeriesPolicy = SeriesPolicy()):
    """Husimi function (1/pi) e^{-|a|^2-|g|^2} |sum (a g*)^n/n! e^{i tau n(n-1)/2}|^2."""
    alpha = complex(alpha)
    arr, flat = _as_points(gamma)
    w = alpha * np.conj(flat)
    mag = np.abs(w)
    # terms peak near n = |w|; the tail past n is below (|w|^n/n!) / (1 - |w|/(n+1))
    nmax = _terms_needed(
        lambda n: _log_tail(mag, n) - 0.5 * (abs(alpha) ** 2 + np.abs(flat) ** 2),
        1, policy.max_terms_q_form, policy.tail_tolerance, "Q function",
    ).max(initial=1)
    n = np.arange(nmax)
    with np.errstate(divide="ignore", invalid="ignore"):
        logmag = n[:, None] * np.log(mag)[None, :] - gammaln(n + 1)[:, None]
    logmag[0] = 0.0
    logmag -= 0.5 * (abs(alpha) ** 2 + np.abs(flat) ** 2)[None, :]
    phase = n[:, None] * np.angle(w)[None, :] + (tau * n * (n - 1) / 2)[:, None]
    s = np.sum(np.exp(logmag + 1j * phase), axis=0)
    return _shape_out(np.abs(s) ** 2 / math.pi, arr)


# ---------------------------------------------------------------- rasters

_METHODS = {
    "series-q": wigner_series_q,
    "series-deriv": wigner_series_deriv,
}


def oracle_raster(method: str, alpha: complex, tau: float, re_range=None, im_range=None,
                  resolution: int = 100, policy: SeriesPolicy = SeriesPolicy()) -> CartesianRaster:
    """Evaluate a series oracle (or ``"q-function"``) on a square raster."""
    window = default_window(alpha)
    re_range = tuple(re_range or window)
    im_range = tuple(im_range or window)
    g = raster_gammas(re_range, im_range, resolution)
    if method == "q-function":
        vals = q_function(alpha, tau, g, policy)
    else:
        try:
            fn = _METHODS[method]
        except KeyError:
            raise ValueError(f"unknown oracle method {method!r}") from None
        vals = fn(alpha, tau, g, policy)
    return CartesianRaster(np.asarray(vals, dtype=float), re_range, im_range, tau)
