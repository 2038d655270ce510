"""Truncated expansions of the differencing identities and their residuals.

Each kind keeps the terms one would write down when expanding
1/(d+x)^2 = d^-2 (1 - 2x/d + 3x^2/d^2 - ...) and is paired with the first
omitted order as a single dominating monomial. ``residual / next_monomial``
is bounded by a constant in the regime a, b <= d/10; those constants are
calibrated and pinned in ``constants.toml``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import identities as ident

KINDS = ("std", "roth", "S", "S_hat", "second_diff")


@dataclass(frozen=True)
class TaylorResidual:
    kind: str
    exact: Fraction
    truncation: Fraction
    residual: Fraction
    next_monomial: Fraction

    @property
    def ratio(self) -> Fraction:
        if self.next_monomial == 0:
            return Fraction(0)
        return abs(self.residual) / self.next_monomial


def _truncation(kind: str, X, d: Fraction, a, b) -> Fraction:
    if kind == "std":
        return X * a / d**3 * (2 - 3 * a / d)
    if kind == "roth":
        return X * a**3 / d**4 * (1 - 2 * a / d)
    if kind == "S":
        return X / d**5 * (
            4 * (a**3 * b - a * b**3)
            + 10 * (a * b**4 + a**2 * b**3 - a**3 * b**2 - a**4 * b) / d
            + 6 * (3 * a**5 * b + 5 * a**4 * b**2 - 5 * a**2 * b**4 - 3 * a * b**5) / d**2
        )
    if kind == "S_hat":
        return X / d**5 * (
            -4 * a * b**3
            + (10 * a * b**4 + 10 * a**2 * b**3) / d
            - (18 * a * b**5 + 30 * a**2 * b**4 + 20 * a**3 * b**3) / d**2
        )
    if kind == "second_diff":
        return X / d**4 * (
            6 * a * b
            - 12 * (a**2 * b + a * b**2) / d
            + 10 * (2 * a**3 * b + 3 * a**2 * b**2 + 2 * a * b**3) / d**2
        )
    raise ValueError(f"unknown expansion kind {kind!r}")


def next_monomial(kind: str, X, d, a, b=0) -> Fraction:
    """First omitted order, as one positive monomial in |a|, |b| and M = max(|a|, |b|)."""
    d, a, b = Fraction(d), abs(Fraction(a)), abs(Fraction(b))
    X = abs(Fraction(X))
    M = max(a, b)
    if kind == "std":
        return X * a**3 / d**5
    if kind == "roth":
        return X * a**5 / d**6
    if kind == "S":
        return X * a * b * M**5 / d**8
    if kind == "S_hat":
        return X * a * b**3 * M**3 / d**8
    if kind == "second_diff":
        return X * a * b * M**3 / d**7
    raise ValueError(f"unknown expansion kind {kind!r}")


def _exact(kind: str, X, d, a, b) -> Fraction:
    if kind == "std":
        return ident.F_a(X, d, a)
    if kind == "roth":
        return ident.R_a(X, d, a)
    if kind == "S":
        return ident.S_ab(X, d, a, b)
    if kind == "S_hat":
        return ident.S_hat_ab(X, d, a, b)
    return ident.F_ab(X, d, a, b)


def taylor_residual(kind: str, X, d, a, b=None, *, check_regime: bool = True) -> TaylorResidual:
    if kind not in KINDS:
        raise ValueError(f"unknown expansion kind {kind!r}")
    two_param = kind in ("S", "S_hat", "second_diff")
    if two_param and b is None:
        raise ValueError(f"kind {kind!r} needs b")
    b = Fraction(b) if b is not None else Fraction(0)
    d, a = Fraction(d), Fraction(a)
    if check_regime and (abs(a) * 10 > d or abs(b) * 10 > d):
        raise ValueError(f"expansion regime needs |a|, |b| <= d/10 (d={d}, a={a}, b={b})")
    exact = _exact(kind, X, d, a, b)
    trunc = _truncation(kind, X, d, a, b)
    return TaylorResidual(kind, exact, trunc, exact - trunc, next_monomial(kind, X, d, a, b))


# Calibration grid: d in {1e2, 1e3, 1e4}, shifts drawn from a fixed ladder.
CALIBRATION_D = (100, 1000, 10000)
CALIBRATION_X = 10**12


def shift_ladder(d: int) -> list[int]:
    cap = d // 10
    raw = {1, 2, 3, 5, 7, d // 100, d // 50, d // 30, d // 20, d // 15, d // 12, cap}
    return sorted(s for s in raw if 1 <= s <= cap)


def calibration_grid(kind: str):
    for d in CALIBRATION_D:
        ladder = shift_ladder(d)
        if kind in ("std", "roth"):
            for a in ladder:
                yield d, a, None
        else:
            for a in ladder:
                for b in ladder:
                    yield d, a, b


def calibrate_kind(kind: str) -> float:
    """max |residual| / next_monomial over the calibration grid."""
    worst = Fraction(0)
    for d, a, b in calibration_grid(kind):
        worst = max(worst, taylor_residual(kind, CALIBRATION_X, d, a, b).ratio)
    return float(worst)
