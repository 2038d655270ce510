"""Integers n with phi(n) close to an integer, and the bounds that control them.

``count_near`` evaluates phi in float64 over numpy chunks. Any n whose
distance to the threshold is within a few ulps of |phi(n)| is decided again
with the exact (rational) phi when one is supplied, so counts do not depend
on floating-point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator

import numpy as np

from .arith import dist_to_z

SCAN_LIMIT = 10**8
CHUNK = 1 << 20
GUARD_ULPS = 10


@dataclass(frozen=True)
class CurveQuery:
    phi: Callable[[np.ndarray], np.ndarray]  # vectorised over int64 arrays
    lo: int
    hi: int  # inclusive; hi < lo is the empty range
    delta: float
    phi_exact: Callable[[int], Fraction] | None = None
    meta: dict = field(default_factory=dict)
    family_id: str = ""

    def __post_init__(self) -> None:
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)


@dataclass(frozen=True)
class CountResult:
    count: int
    guarded: int  # n re-decided exactly
    unguarded: int  # n inside the band with no exact phi available


def count_near_detail(query: CurveQuery, limit: int = SCAN_LIMIT) -> CountResult:
    n_total = len(query)
    if n_total > limit:
        raise ValueError(f"range of {n_total} exceeds scan limit {limit}")
    delta = query.delta
    delta_q = Fraction(delta)
    count = guarded = unguarded = 0
    for start in range(query.lo, query.hi + 1, CHUNK):
        n = np.arange(start, min(query.hi, start + CHUNK - 1) + 1, dtype=np.int64)
        v = np.asarray(query.phi(n), dtype=np.float64)
        dist = np.abs(v - np.rint(v))
        band = np.abs(dist - delta) <= GUARD_ULPS * np.spacing(np.abs(v) + 1.0)
        count += int(np.count_nonzero((dist <= delta) & ~band))
        for m, vm in zip(n[band].tolist(), v[band].tolist()):
            if query.phi_exact is not None:
                guarded += 1
                count += dist_to_z(query.phi_exact(m)) <= delta_q
            else:
                unguarded += 1
                count += abs(vm - round(vm)) <= delta
    return CountResult(count, guarded, unguarded)


def count_near(query: CurveQuery, limit: int = SCAN_LIMIT) -> int:
    return count_near_detail(query, limit).count


def count_near_exact(query: CurveQuery) -> int:
    """Fully rational recount; the oracle for ``count_near``."""
    if query.phi_exact is None:
        raise ValueError("query has no exact phi")
    delta_q = Fraction(query.delta)
    return sum(1 for n in range(query.lo, query.hi + 1) if dist_to_z(query.phi_exact(n)) <= delta_q)


# --- bounds -----------------------------------------------------------------


def _positive(**kw) -> None:
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


def bound_frac(L: float, V: float, delta: float) -> float:
    """(L + 1)(1 + delta/V): phi of total variation L and slope ~V."""
    if L < 0:
        raise ValueError("L must be >= 0")
    _positive(V=V, delta=delta)
    return (L + 1) * (1 + delta / V)


def bound_stat(N: float, T: float, delta: float) -> float:
    """N(delta + sqrt(delta/T)) + T + 1, allowing a stationary point."""
    _positive(N=N, T=T, delta=delta)
    return N * (delta + math.sqrt(delta / T)) + T + 1


def stat_hypothesis(N: float, T: float, delta: float) -> bool:
    return N * delta >= T


def bound_poisson(N: float, T: float, delta: float) -> float:
    """N delta + sqrt(T/delta) + N/sqrt(T/delta), for phi = T F(n/N) with |F''| ~ 1."""
    _positive(N=N, T=T, delta=delta)
    s = math.sqrt(T / delta)
    return N * delta + s + N / s


def ft6_terms(N: float, T: float, delta: float, r: int) -> tuple[float, float, float]:
    if r < 3:
        raise ValueError(f"r must be >= 3, got {r}")
    _positive(N=N, T=T, delta=delta)
    t1 = T ** (2 / (r * (r + 1))) * N ** ((r - 1) / (r + 1))
    t2 = N * delta ** (2 / ((r - 1) * (r - 2)))
    t3 = N * (delta * T * N ** (1 - r)) ** (1 / (r * r - 3 * r + 4))
    return t1, t2, t3


def ft6_hypothesis(N: float, T: float, delta: float, r: int, c_r: float = 1e-2) -> bool:
    cap = min(T * N ** (2 - r), T ** ((r - 4) / (r - 2)) * N ** (3 - r) + T * N ** (1 - r))
    return delta <= c_r * cap


def bound_ft6(N: float, T: float, delta: float, r: int, c_r: float = 1e-2) -> tuple[float, bool]:
    return sum(ft6_terms(N, T, delta, r)), ft6_hypothesis(N, T, delta, r, c_r)


def ft6_specialised(X: float, H: float, D: float) -> tuple[float, float, float]:
    """r = 4 with T = X/D^2, N = D, delta = H/D^2, written out directly."""
    return X**0.1 * D**0.4, D ** (1 / 3) * H ** (1 / 3), D * (H * X / D**7) ** 0.125


# --- families and the validation harness -----------------------------------------


@dataclass(frozen=True)
class BoundReport:
    brute_count: int
    bound_value: float
    ratio: float
    hypothesis_ok: bool
    family_id: str
    params: dict = field(default_factory=dict)


def _report(q: CurveQuery, bound: float, ok: bool) -> BoundReport:
    c = count_near(q) if len(q) else 0
    return BoundReport(c, bound, c / max(bound, 1.0), ok, q.family_id, dict(q.meta))


def linear_query(alpha: Fraction, beta: Fraction, M: int, delta: float) -> CurveQuery:
    af, bf = float(alpha), float(beta)
    return CurveQuery(
        phi=lambda n: af * n + bf,
        lo=0,
        hi=M,
        delta=delta,
        phi_exact=lambda n: alpha * n + beta,
        meta={"alpha": alpha, "beta": beta, "M": M, "L": abs(af) * M, "V": abs(af)},
        family_id="linear",
    )


def two_monomial_query(T: int, N: int, c: tuple[Fraction, Fraction], e: tuple[int, int], delta: float) -> CurveQuery:
    """phi(n) = T (c0 (n/N)^e0 + c1 (n/N)^e1) on [N, 2N]."""
    (c0, c1), (e0, e1) = c, e
    f0, f1 = float(c0), float(c1)

    def phi(n):
        y = n / N
        return T * (f0 * y**e0 + f1 * y**e1)

    def exact(n):
        y = Fraction(n, N)
        return T * (c0 * y**e0 + c1 * y**e1)

    return CurveQuery(phi, N, 2 * N, delta, exact,
                      {"T": T, "N": N, "c": (c0, c1), "e": (e0, e1)}, "two_monomial")


def witness_query(T: int, N: int, delta: float) -> CurveQuery:
    """T((n - N)/N)^2 on [N, 2N]; it lingers near 0 for about N sqrt(delta/T) steps."""
    return CurveQuery(
        phi=lambda n: T * ((n - N) / N) ** 2,
        lo=N,
        hi=2 * N,
        delta=delta,
        phi_exact=lambda n: Fraction(T * (n - N) ** 2, N * N),
        meta={"T": T, "N": N},
        family_id="witness",
    )


def poisson_query(T: int, N: int, slope: Fraction, delta: float) -> CurveQuery:
    """T F(n/N), F(x) = x^2 + slope x, n in (N, 2N]."""
    s = float(slope)
    return CurveQuery(
        phi=lambda n: T * ((n / N) ** 2 + s * (n / N)),
        lo=N + 1,
        hi=2 * N,
        delta=delta,
        phi_exact=lambda n: T * (Fraction(n, N) ** 2 + slope * Fraction(n, N)),
        meta={"T": T, "N": N, "slope": slope},
        family_id="poisson",
    )


def inverse_square_query(X: int, D: int, H: int) -> CurveQuery:
    """X/n^2 on [D, 2D] at delta = H/D^2."""
    return CurveQuery(
        phi=lambda n: X / (n.astype(np.float64) ** 2),
        lo=D,
        hi=2 * D,
        delta=H / D**2,
        phi_exact=lambda n: Fraction(X, n * n),
        meta={"X": X, "D": D, "H": H},
        family_id="inverse_square",
    )


def _rand_fraction(rng: np.random.Generator, lo: float, hi: float, den: int = 10**6) -> Fraction:
    return Fraction(int(rng.integers(int(lo * den), int(hi * den) + 1)), den)


def _log_uniform(rng, lo, hi) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def linear_family(rng: np.random.Generator) -> Iterator[tuple[CurveQuery, float, bool]]:
    while True:
        alpha = Fraction(_log_uniform(rng, 1e-3, 10.0)).limit_denominator(10**6)
        beta = _rand_fraction(rng, 0, 1)
        M = int(rng.integers(10, 20001))
        delta = _log_uniform(rng, 1e-3, 0.4)
        q = linear_query(alpha, beta, M, delta)
        yield q, bound_frac(q.meta["L"], q.meta["V"], delta), True


def two_monomial_family(rng: np.random.Generator) -> Iterator[tuple[CurveQuery, float, bool]]:
    while True:
        T = int(_log_uniform(rng, 10, 1e4))
        delta = _log_uniform(rng, 1e-3, 0.1)
        N = math.ceil(T / delta * rng.uniform(1, 4))
        if N > 2 * 10**6:
            continue
        e = tuple(int(x) for x in rng.choice([1, 2, 3, -1], size=2, replace=False))
        # opposite signs put a stationary point inside [N, 2N] for most draws
        c0 = _rand_fraction(rng, 0.2, 1)
        c1 = -_rand_fraction(rng, 0.2, 1) * int(rng.choice([1, 2, 4]))
        q = two_monomial_query(T, N, (c0, c1), e, delta)
        yield q, bound_stat(N, T, delta), stat_hypothesis(N, T, delta)


def poisson_family(rng: np.random.Generator) -> Iterator[tuple[CurveQuery, float, bool]]:
    while True:
        T = int(_log_uniform(rng, 10, 1e6))
        N = int(_log_uniform(rng, 100, 2e5))
        delta = _log_uniform(rng, 1e-4, 0.3)
        slope = _rand_fraction(rng, -1, 1)
        q = poisson_query(T, N, slope, delta)
        yield q, bound_poisson(N, T, delta), True


def inverse_square_family(rng: np.random.Generator, c_r: float = 1e-2) -> Iterator[tuple[CurveQuery, float, bool]]:
    from .arith import iroot

    while True:
        X = int(rng.integers(10**9, 10**10 + 1))
        H = iroot(X, 5)
        D_max = int((X / H) ** (1 / 3) / 8)
        D = int(rng.integers(math.isqrt(H) + 1, D_max + 1))  # delta = H/D^2 < 1
        q = inverse_square_query(X, D, H)
        bound, ok = bound_ft6(D, X / D**2, H / D**2, 4, c_r)
        yield q, bound, ok


FAMILIES = {
    "frac": linear_family,
    "stat": two_monomial_family,
    "poisson": poisson_family,
    "ft6": inverse_square_family,
}


def validate_family(family, trials: int, seed: int) -> list[BoundReport]:
    """Draw ``trials`` queries from ``family`` (a name or a generator factory) and count each."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    factory = FAMILIES[family] if isinstance(family, str) else family
    gen = factory(np.random.default_rng(seed))
    out = []
    for _ in range(trials):
        try:
            q, bound, ok = next(gen)
        except StopIteration:
            raise RuntimeError("curve family exhausted before the requested number of trials")
        out.append(_report(q, bound, ok))
    return out


def max_ratio(reports: Iterable[BoundReport]) -> float:
    return max((r.ratio for r in reports), default=0.0)


# --- the stationary-point witness ---------------------------------------------

WITNESS_T = (10**2, 10**3, 10**4)
WITNESS_DELTA = (1e-2, 1e-3)


def witness_constant(T_grid=WITNESS_T, delta_grid=WITNESS_DELTA) -> tuple[float, list[dict]]:
    """min over the grid of count / (N sqrt(delta/T)) with N = 2 ceil(T/delta)."""
    rows = []
    for T in T_grid:
        for delta in delta_grid:
            N = 2 * math.ceil(T / delta)
            c = count_near(witness_query(T, N, delta))
            rows.append({"T": T, "delta": delta, "N": N, "count": c,
                         "ratio": c / (N * math.sqrt(delta / T))})
    return min(r["ratio"] for r in rows), rows
