"""Exact differencing identities built from X/(d+k)^2.

All functions take integer or rational arguments and return Fractions.
Shifts may be rational (b0, v live in (1/l1)Z), so d + shift is never
assumed integral.
"""

from __future__ import annotations

from fractions import Fraction

Num = int | Fraction


def _q(X: Num, t: Num) -> Fraction:
    # X / t^2
    if t == 0:
        raise ZeroDivisionError("shifted denominator vanishes")
    return Fraction(X) / (Fraction(t) ** 2)


def F_a(X: Num, d: Num, a: Num) -> Fraction:
    """X/d^2 - X/(d+a)^2."""
    return _q(X, d) - _q(X, d + a)


def R_a(X: Num, d: Num, a: Num) -> Fraction:
    """Roth's combination -(2d - a) X/d^2 + (2d + 3a) X/(d+a)^2."""
    return -(2 * d - a) * _q(X, d) + (2 * d + 3 * a) * _q(X, d + a)


def S_ab(X: Num, d: Num, a: Num, b: Num) -> Fraction:
    return (
        -(b - a) * _q(X, d)
        + (b + a) * _q(X, d + a)
        - (b + a) * _q(X, d + b)
        + (b - a) * _q(X, d + a + b)
    )


def S_hat_ab(X: Num, d: Num, a: Num, b: Num) -> Fraction:
    """S_{a,b}(d) - (R_a(d) - R_a(d+b)); strips the a^3 b term of S."""
    return S_ab(X, d, a, b) - (R_a(X, d, a) - R_a(X, d + b, a))


def F_ab(X: Num, d: Num, a: Num, b: Num) -> Fraction:
    """Second difference F_a(d) - F_a(d+b)."""
    return F_a(X, d, a) - F_a(X, d + b, a)


def p1_p2(l1: Num, l2: Num, b0: Num, v: Num) -> tuple[Fraction, Fraction]:
    """Closed forms of the cubic and quartic defect polynomials."""
    l1, l2, b0, v = (Fraction(x) for x in (l1, l2, b0, v))
    m = l2 - l1
    p1 = 3 * l1**3 * l2 * m * b0 * v**2 + l1**3 * (2 * l2 - l1) * v**3
    p2 = (
        2 * l1**3 * l2**2 * m**2 * b0**3 * v
        + 6 * l1**3 * l2**2 * m * b0**2 * v**2
        + 2 * l1**3 * l2 * (3 * l2 - 2 * l1) * b0 * v**3
        + l1**3 * (2 * l2 - l1) * v**4
    )
    return p1, p2


def p1_p2_combinations(l1: Num, l2: Num, b0: Num, v: Num) -> tuple[Fraction, Fraction]:
    """The defining weighted sums of cubes and fourth powers, unexpanded."""
    l1, l2, b0, v = (Fraction(x) for x in (l1, l2, b0, v))
    m = l2 - l1
    w1, w2, w3 = l2**2 * m**2, l1**2 * m**2, l1**2 * l2**2
    c1 = w1 * (b0 * l1) ** 3 - w2 * (b0 * l2 + v) ** 3 + w3 * (b0 * m + v) ** 3
    c2 = (
        w1 * (b0 * l1) ** 4
        - w2 * (b0 * l2 + v) ** 4
        + w3 * ((b0 * m + v) ** 4 + 2 * l1 * b0 * (m * b0 + v) ** 3)
    )
    return c1, c2


def upsilon(X: Num, d: Num, a: Num, b0: Num, v: Num, l1: Num, l2: Num) -> Fraction:
    """Weighted S-hat combination that cancels the b0^3 part of three shifts."""
    b0, v = Fraction(b0), Fraction(v)
    m = l2 - l1
    return (
        l2**2 * m**2 * S_hat_ab(X, d, a, b0 * l1)
        - l1**2 * m**2 * S_hat_ab(X, d, a, b0 * l2 + v)
        + l1**2 * l2**2 * S_hat_ab(X, d + l1 * b0, a, b0 * m + v)
    )


def upsilon_leading(
    X: Num, d: Num, a: Num, b0: Num, v: Num, l1: Num, l2: Num, p2_weight: Num = Fraction(-5, 2)
) -> Fraction:
    """(X/d^5)(-4a + 10a^2/d)(p1(v) + w p2(v)/d), w = -5/2.

    The quartic part enters through the truncation b^3 - (5/2) b^4/d of
    S-hat, hence the weight -5/2 on p2; ``p2_weight=1`` gives the form with
    unit weight for comparison.
    """
    d = Fraction(d)
    p1, p2 = p1_p2(l1, l2, b0, v)
    return X / d**5 * (-4 * a + 10 * Fraction(a) ** 2 / d) * (p1 + Fraction(p2_weight) * p2 / d)


def upsilon_envelope(X: Num, d: Num, a: Num, b0: Num, v: Num, l1: Num, l2: Num) -> Fraction:
    """Size of the terms dropped by ``upsilon_leading``.

    Weighted by the three S-hat coefficients: X a M^3 (M + a)^2 / d^7 with
    M the largest shift in play.
    """
    b0, v, d = Fraction(b0), Fraction(v), Fraction(d)
    m = l2 - l1
    M = max(abs(b0 * l1), abs(b0 * l2 + v), abs(b0 * m + v), abs(l1 * b0))
    weight = l2**2 * m**2 + l1**2 * m**2 + l1**2 * l2**2
    return weight * abs(X) * abs(a) * M**3 * (M + abs(a)) ** 2 / d**7


def qoppa(X: Num, d: Num, a: Num, b0: Num, v: Num, l1: Num, l2: Num) -> Fraction:
    b0, v = Fraction(b0), Fraction(v)
    return l1 * F_ab(X, d, a, l2 * b0 + v) - l2 * F_ab(X, d, a, l1 * b0)


def qoppa_leading(X: Num, d: Num, a: Num, b0: Num, v: Num, l1: Num, l2: Num) -> Fraction:
    """6 l1 X a v / d^4 - 12 l1 l2 (l2 - l1) X a b0^2 / d^5.

    The second term carries a minus sign: the 1/d correction of the second
    difference F_{a,b} is -12(a^2 b + a b^2)/d.
    """
    d, b0, v = Fraction(d), Fraction(b0), Fraction(v)
    return 6 * l1 * X * a * v / d**4 - 12 * l1 * l2 * (l2 - l1) * X * a * b0**2 / d**5


def qoppa_envelope(X: Num, d: Num, a: Num, b0: Num, v: Num, l1: Num, l2: Num) -> Fraction:
    """Dropped-term scale: X a l2 (|v|(a + M)/d^5 + M^2 (a + M)^2/d^6), M the largest shift."""
    d, b0, v = Fraction(d), Fraction(b0), Fraction(v)
    M = max(abs(l2 * b0 + v), abs(l1 * b0))
    return abs(X) * abs(a) * l2 * (abs(v) * (abs(a) + M) / d**5 + M**2 * (abs(a) + M) ** 2 / d**6)
