"""Real-variable inverses of R_a and F_a.

R_a(t) is a difference of two terms of size ~X/t that cancel down to
~X a^3/t^4, so double precision is useless for it at desk scale. The forward
maps are evaluated in mpmath at ``dps`` digits; inversion is bisection with
safeguarded Newton steps.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

import mpmath

DEFAULT_DPS = 50


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def R_a_real(X, t, a):
    X, t, a = _mpf(X), _mpf(t), _mpf(a)
    return -(2 * t - a) * X / t**2 + (2 * t + 3 * a) * X / (t + a) ** 2


def R_a_prime(X, t, a):
    X, t, a = _mpf(X), _mpf(t), _mpf(a)
    return (
        -2 * X / t**2
        + 2 * (2 * t - a) * X / t**3
        + 2 * X / (t + a) ** 2
        - 2 * (2 * t + 3 * a) * X / (t + a) ** 3
    )


def F_a_real(X, t, a):
    X, t, a = _mpf(X), _mpf(t), _mpf(a)
    return X / t**2 - X / (t + a) ** 2


def F_a_prime(X, t, a):
    X, t, a = _mpf(X), _mpf(t), _mpf(a)
    return -2 * X / t**3 + 2 * X / (t + a) ** 3


class InversionError(ValueError):
    pass


def check_monotone(f: Callable, lo, hi, samples: int = 17) -> int:
    """Sign (+1/-1) of f on [lo, hi] from sampled divided differences."""
    lo, hi = _mpf(lo), _mpf(hi)
    pts = [lo + (hi - lo) * k / (samples - 1) for k in range(samples)]
    vals = [f(p) for p in pts]
    diffs = [b - a for a, b in zip(vals, vals[1:])]
    if all(d > 0 for d in diffs):
        return 1
    if all(d < 0 for d in diffs):
        return -1
    raise InversionError(f"map is not monotone on [{float(lo)}, {float(hi)}]")


def invert_monotone(f, fprime, target, lo, hi, rtol=1e-12, max_iter=400):
    """t in [lo, hi] with |f(t) - target| <= rtol |target|."""
    target = _mpf(target)
    lo, hi = _mpf(lo), _mpf(hi)
    sign = check_monotone(f, lo, hi)
    flo, fhi = f(lo), f(hi)
    if not min(flo, fhi) <= target <= max(flo, fhi):
        raise InversionError(
            f"target {float(target)} outside [{float(min(flo, fhi))}, {float(max(flo, fhi))}]"
        )
    tol = abs(target) * rtol if target != 0 else mpmath.mpf(rtol)
    t = (lo + hi) / 2
    for _ in range(max_iter):
        ft = f(t)
        err = ft - target
        if abs(err) <= tol and hi - lo < abs(t) * rtol * 1e3:
            return t
        # keep the bracket: target lies between f(lo) and f(hi)
        if (err > 0) == (sign > 0):
            hi = t
        else:
            lo = t
        slope = fprime(t)
        step = t - err / slope if slope != 0 else None
        t = step if step is not None and lo < step < hi else (lo + hi) / 2
    if abs(f(t) - target) <= tol:
        return t
    raise InversionError("inversion did not converge")


def tilde_d(X, a, rho, bracket, rtol=1e-12, dps: int = DEFAULT_DPS):
    """Real t in bracket with R_a(t) = rho, as an mpf."""
    with mpmath.workdps(dps):
        return invert_monotone(
            lambda t: R_a_real(X, t, a), lambda t: R_a_prime(X, t, a), rho, *bracket, rtol=rtol
        )


def breve_d(X, a, f, bracket, rtol=1e-12, dps: int = DEFAULT_DPS):
    """Real t in bracket with F_a(t) = f, as an mpf."""
    with mpmath.workdps(dps):
        return invert_monotone(
            lambda t: F_a_real(X, t, a), lambda t: F_a_prime(X, t, a), f, *bracket, rtol=rtol
        )


def breve_d_prime(X, a, t):
    """Derivative of F_a^{-1} at F_a(t)."""
    return 1 / F_a_prime(X, t, a)
