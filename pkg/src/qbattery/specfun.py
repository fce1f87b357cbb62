"""Special functions behind the closed-form charging results.

``gen_exp_integral`` evaluates the generalized exponential integral

    E_alpha(i x) = int_1^inf u^(-alpha) exp(i x u) du

on the imaginary axis, understood as the Abel limit eps -> 0+ of the damped
integral with exp((i x - eps) u).  Production path: power series for small
|x|, Lentz continued fraction for the upper incomplete gamma otherwise.
"""
from __future__ import annotations

import math
import cmath

import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError, EvaluationError

_SERIES_CUTOFF = 3.0
_INV_E = math.exp(-1.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _series(alpha: float, s: complex) -> complex:
    # s^(alpha-1) Gamma(a, s) = Gamma(a) s^-a - sum_n (-s)^n / (n! (a+n)), a = 1 - alpha
    a = 1.0 - alpha
    total = 0.0 + 0.0j
    term = 1.0 + 0.0j
    n = 0
    while True:
        contrib = term / (a + n)
        total += contrib
        if abs(contrib) <= 1e-17 * abs(total) and n > 2:
            break
        n += 1
        term *= -s / n
        if n > 500:
            raise DivergenceError(f"series failed to converge at s={s}")
    return math.gamma(a) * s ** (-a) - total


def _continued_fraction(alpha: float, s: complex) -> complex:
    # Gamma(a, s) = exp(-s) s^a / (s + 1 - a - 1(1-a)/(s + 3 - a - ...)), modified Lentz
    a = 1.0 - alpha
    tiny = 1e-300
    b = s + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 20000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise DivergenceError(f"continued fraction failed to converge at s={s}")
    # s^(alpha-1) * exp(-s) s^a * h == exp(-s) * h
    return cmath.exp(-s) * h


def gen_exp_integral(alpha: float, x: float) -> complex:
    """Abel-regularized ``int_1^inf u^-alpha exp(i x u) du`` for real ``x != 0``.

    Parameters
    ----------
    alpha : float
        Exponent in [0, 1).
    x : float
        Real frequency; the integral diverges at x = 0.

    Returns
    -------
    complex
    """
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x}")
    if x == 0.0:
        raise DivergenceError("E_alpha(0) diverges for alpha < 1")
    if x < 0.0:
        # exact conjugation symmetry of the defining integral
        return gen_exp_integral(alpha, -x).conjugate()
    s = complex(0.0, -x)
    if x <= _SERIES_CUTOFF:
        return _series(alpha, s)
    return _continued_fraction(alpha, s)


def fresnel(z: float) -> tuple[float, float]:
    """Fresnel integrals ``(C(z), S(z))`` with the pi u^2 / 2 convention."""
    S, C = special.fresnel(z)
    return float(C), float(S)


def lambert_w_branch_minus1(x: float) -> float:
    """Lower real branch W_-1 on (-1/e, 0): the root w <= -1 of w e^w = x.

    Bisection to full precision, then guarded Halley polish.
    """
    if abs(x + _INV_E) <= 4 * np.finfo(float).eps:
        return -1.0
    if not -_INV_E < x < 0.0:
        raise DomainError(f"W_-1 needs x in (-1/e, 0), got {x}")

    def f(w):
        return w * math.exp(w) - x

    hi = -1.0
    lo = -2.0
    while f(lo) < 0.0:
        lo *= 2.0
    # f(lo) >= 0 > f(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)
    for _ in range(3):
        ew = math.exp(w)
        fw = w * ew - x
        if fw == 0.0 or w == -1.0:
            break
        wp1 = w + 1.0
        step = fw / (ew * wp1 - (w + 2.0) * fw / (2.0 * wp1))
        w_new = w - step
        if not lo <= w_new <= hi:
            break
        if abs(f(w_new)) > abs(fw):
            break
        w = w_new
    return w


def maximize_scalar(f, bracket, tol=1e-10, n_grid=64, first=False):
    """Locate a local maximum of ``f`` inside ``bracket``.

    The bracket is scanned on a uniform grid of ``n_grid`` points; the best
    sample (or, with ``first=True``, the earliest interior local maximum) is
    refined by golden-section search over its two neighbouring cells.

    Returns
    -------
    (t_star, f_star)
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise DomainError(f"bracket must satisfy lo < hi, got {bracket}")
    if not tol > 0:
        raise DomainError("tol must be positive")

    def ev(t):
        v = float(f(t))
        if not math.isfinite(v):
            raise EvaluationError(f"objective is not finite at t={t}: {v}")
        return v

    ts = np.linspace(lo, hi, max(int(n_grid), 3))
    vals = [ev(t) for t in ts]
    idx = None
    if first:
        for i in range(1, len(ts) - 1):
            if vals[i] > vals[i - 1] and vals[i] >= vals[i + 1]:
                idx = i
                break
    if idx is None:
        idx = int(np.argmax(vals))
    a = ts[max(idx - 1, 0)]
    b = ts[min(idx + 1, len(ts) - 1)]

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = ev(c), ev(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = ev(c)
        elif fc < fd:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = ev(d)
        else:
            # flat at rounding level: keep the symmetric middle
            a, b = c, d
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            fc, fd = ev(c), ev(d)
    t_star = 0.5 * (a + b)
    return t_star, ev(t_star)
