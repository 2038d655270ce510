"""Squarefree counting on intervals [X, X+H] and the square-divisor sets.

The exact count of squarefree n in [X, X+H] is obtained two independent
ways: by sieving out multiples of p^2 (``count_squarefree``) and by the
Moebius expansion sum_{d} mu(d) #{n : d^2 | n} (``mobius_decomposition``).
The sets D_[D,2D] of d having some multiple m*d^2 in the interval are what
the short-interval error term is made of.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .arith import (
    DEFAULT_BLOCK,
    INT64_SAFE,
    SIX_OVER_PI_SQ,
    ceil_div,
    mobius_upto,
    primes_upto,
)


@dataclass(frozen=True)
class Interval:
    """The closed integer interval [X, X + H]."""

    X: int
    H: int

    def __post_init__(self) -> None:
        if self.X < 1:
            raise ValueError(f"X must be >= 1, got {self.X}")
        if self.H < 0:
            raise ValueError(f"H must be >= 0, got {self.H}")
        if self.X + self.H >= INT64_SAFE:
            raise OverflowError(f"X + H = {self.X + self.H} exceeds the 2^62 width")

    @property
    def hi(self) -> int:
        return self.X + self.H

    @property
    def is_short(self) -> bool:
        return self.H <= self.X

    def __len__(self) -> int:
        return self.H + 1


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class ScaleContext:
    """Parameter bundle for one dyadic scale D.

    X, H, D are integers; U, A, W may be any positive reals and are held as
    exact fractions so that every derived quantity is reproducible.
    """

    X: int
    H: int
    D: int
    U: Fraction = Fraction(1)
    A: Fraction = Fraction(1)
    W: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if self.X < 1 or self.H < 0 or self.D < 1:
            raise ValueError("need X, D >= 1 and H >= 0")
        for name in ("U", "A", "W"):
            val = _frac(getattr(self, name))
            if val <= 0:
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, val)

    def _need_length(self) -> None:
        # the scale parameters divide by H; only membership makes sense at H = 0
        if self.H == 0:
            raise ValueError("derived scale parameters need H >= 1")

    @property
    def G(self) -> Fraction:
        self._need_length()
        return Fraction(self.X, self.H**5)

    @property
    def Delta(self) -> Fraction:
        self._need_length()
        return Fraction(self.D, self.H)

    @property
    def R(self) -> Fraction:
        return self.X * self.A**3 / (self.Delta**4 * self.H**4)

    @property
    def B(self) -> Fraction:
        return (self.Delta**2 / self.G) * (self.Delta / self.A) ** 3

    @property
    def F(self) -> Fraction:
        return self.G * self.H**2 * self.A / self.Delta**3

    @property
    def window(self) -> tuple[int, int]:
        return (self.D, 2 * self.D)

    def with_(self, **changes) -> "ScaleContext":
        kw = dict(X=self.X, H=self.H, D=self.D, U=self.U, A=self.A, W=self.W)
        kw.update(changes)
        return ScaleContext(**kw)

    def as_dict(self) -> dict:
        return {
            "X": self.X, "H": self.H, "D": self.D, "U": self.U, "A": self.A, "W": self.W,
            "G": self.G, "Delta": self.Delta, "R": self.R, "B": self.B, "F": self.F,
        }


@dataclass(frozen=True)
class DSet:
    context: ScaleContext
    members: tuple[int, ...]
    window: tuple[int, int]
    rule: str = "exact"

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, d: int) -> bool:
        i = np.searchsorted(self.members, d)
        return i < len(self.members) and self.members[i] == d

    def __iter__(self):
        return iter(self.members)


@dataclass(frozen=True)
class DecompositionReport:
    interval: Interval
    D_minus: int
    D_plus: int
    main_term: Fraction
    exact_count: int
    small_d_sum: int
    large_d_sum: int
    per_scale_counts: dict[int, int]
    residual: Fraction
    error_budget: Fraction

    @property
    def bound_ratio(self) -> float:
        return float(abs(self.residual) / self.error_budget) if self.error_budget else 0.0


@dataclass(frozen=True)
class GapReport:
    limit: int
    record_gaps: tuple[tuple[int, int], ...]
    max_gap: int
    squarefree_count: int
    max_fifth_root_ratio: float
    argmax_fifth_root_ratio: int
    fifth_root_violations: int


# --- counting -----------------------------------------------------------


def _squarefree_flags(lo: int, hi: int) -> np.ndarray:
    """Boolean mask over [lo, hi]: True where n is squarefree."""
    length = hi - lo + 1
    flags = np.ones(length, dtype=bool)
    primes = primes_upto(math.isqrt(hi))
    if len(primes) == 0:
        return flags
    squares = primes * primes
    # primes whose square is shorter than the block: strided marking
    small = squares <= length
    for pp in squares[small]:
        pp = int(pp)
        flags[(-lo) % pp :: pp] = False
    # larger squares hit the block at most once each
    big = squares[~small]
    if len(big):
        first = ((lo + big - 1) // big) * big
        hits = first[first <= hi] - lo
        flags[hits] = False
    return flags


def _iter_flag_blocks(lo: int, hi: int, block: int):
    start = lo
    while start <= hi:
        stop = min(hi, start + block - 1)
        yield start, _squarefree_flags(start, stop)
        start = stop + 1


def count_squarefree(interval: Interval, block: int = DEFAULT_BLOCK) -> int:
    """#{n in [X, X+H] : n squarefree}, by sieving multiples of p^2."""
    return sum(int(f.sum()) for _, f in _iter_flag_blocks(interval.X, interval.hi, block))


def count_squarefree_upto(N: int) -> int:
    """#{1 <= n <= N : n squarefree}."""
    if N < 1:
        return 0
    return count_squarefree(Interval(1, N - 1))


def _multiples_in(interval: Interval, d: np.ndarray) -> np.ndarray:
    dd = d * d
    return interval.hi // dd - (interval.X - 1) // dd


def mobius_decomposition(interval: Interval, D_minus: int, D_plus: int) -> DecompositionReport:
    """Evaluate sum_{d <= D_plus} mu(d) #{n in interval : d^2 | n} exactly.

    Per-scale counts are #D_[D, 2D] for D = 2^k with D_minus <= D < D_plus
    (windows clipped at D_plus). With D_plus >= sqrt(X + H) the exact sum is
    the squarefree count.
    """
    if not 1 <= D_minus <= D_plus:
        raise ValueError(f"need 1 <= D_minus <= D_plus, got {D_minus}, {D_plus}")
    if D_plus * D_plus >= INT64_SAFE:
        raise OverflowError(f"D_plus^2 = {D_plus * D_plus} exceeds the 2^62 width")
    mu = mobius_upto(D_plus).astype(np.int64)
    d = np.arange(D_plus + 1, dtype=np.int64)
    d[0] = 1
    mult = _multiples_in(interval, d)
    mult[0] = 0
    weighted = mu * mult
    small = int(weighted[: D_minus + 1].sum())
    large = int(weighted[D_minus + 1 :].sum())
    exact = small + large

    per_scale: dict[int, int] = {}
    D = 1 << max(0, (D_minus - 1).bit_length())
    while D < D_plus:
        hi = min(2 * D, D_plus)
        per_scale[D] = int(np.count_nonzero(mult[D : hi + 1]))
        D *= 2

    main = SIX_OVER_PI_SQ * interval.H
    budget = D_minus + Fraction(interval.H, D_minus) + sum(per_scale.values())
    return DecompositionReport(
        interval=interval,
        D_minus=D_minus,
        D_plus=D_plus,
        main_term=main,
        exact_count=exact,
        small_d_sum=small,
        large_d_sum=large,
        per_scale_counts=per_scale,
        residual=exact - main,
        error_budget=budget,
    )


# --- square-divisor sets ------------------------------------------------


def _window(context: ScaleContext, window: tuple[int, int] | None) -> tuple[int, int]:
    lo, hi = window if window is not None else context.window
    if lo < 1 or hi < lo:
        raise ValueError(f"bad window {lo, hi}")
    return lo, hi


def d_set(context: ScaleContext, window: tuple[int, int] | None = None) -> DSet:
    """{d in window : some m d^2 lies in [X, X+H]} by floor((X+H)/d^2) >= ceil(X/d^2)."""
    lo, hi = _window(context, window)
    X, top = context.X, context.X + context.H
    if hi * hi < INT64_SAFE and top < INT64_SAFE:
        d = np.arange(lo, hi + 1, dtype=np.int64)
        dd = d * d
        keep = top // dd >= (X + dd - 1) // dd
        members = tuple(int(v) for v in d[keep])
    else:
        members = tuple(v for v in range(lo, hi + 1) if top // (v * v) >= ceil_div(X, v * v))
    return DSet(context, members, (lo, hi), "exact")


def frac_d_set(
    context: ScaleContext, window: tuple[int, int] | None = None
) -> tuple[DSet, tuple[int, ...]]:
    """{d in window : ||X/d^2|| <= H/D^2} and its symmetric difference with d_set."""
    lo, hi = _window(context, window)
    X, H, D = context.X, context.H, context.D
    members = []
    for v in range(lo, hi + 1):
        q = v * v
        r = X % q
        if min(r, q - r) * D * D <= H * q:
            members.append(v)
    exact = set(d_set(context, (lo, hi)).members)
    sym = tuple(sorted(exact.symmetric_difference(members)))
    return DSet(context, tuple(members), (lo, hi), "fractional"), sym


def dyadic_scales(lo: int, hi: int) -> list[int]:
    """Powers of two D with lo <= D <= hi."""
    out = []
    D = 1
    while D <= hi:
        if D >= lo:
            out.append(D)
        D *= 2
    return out


@dataclass(frozen=True)
class SpacingReport:
    triples: int
    min_spacing: int | None
    threshold: float
    ratio: float | None


def nair_spacing(dset: DSet) -> SpacingReport:
    """Among three consecutive members, the larger of the two gaps vs Delta^{4/3}(H^4/X)^{1/3}."""
    ctx = dset.context
    m = dset.members
    threshold = float(ctx.Delta) ** (4 / 3) * (ctx.H**4 / ctx.X) ** (1 / 3)
    if len(m) < 3:
        return SpacingReport(0, None, threshold, None)
    spans = [max(m[i + 1] - m[i], m[i + 2] - m[i + 1]) for i in range(len(m) - 2)]
    best = min(spans)
    return SpacingReport(len(spans), best, threshold, best / threshold)


# --- gaps ---------------------------------------------------------------


@dataclass
class GapPartial:
    """Streaming gap state over a contiguous segment; merges associatively."""

    first: int | None = None
    last: int | None = None
    count: int = 0
    max_gap: int = 0
    records: list[tuple[int, int]] = field(default_factory=list)
    best_ratio: float = 0.0
    best_ratio_q: int = 0
    violations: int = 0

    def _absorb_gaps(self, q: np.ndarray, g: np.ndarray) -> None:
        if len(g) == 0:
            return
        running = np.maximum.accumulate(g)
        prior = np.concatenate(([self.max_gap], np.maximum(running[:-1], self.max_gap)))
        for i in np.flatnonzero(g > prior):
            self.records.append((int(q[i]), int(g[i])))
        self.max_gap = max(self.max_gap, int(running[-1]))
        ratio = g / q.astype(np.float64) ** 0.2
        i = int(np.argmax(ratio))
        if ratio[i] > self.best_ratio:
            self.best_ratio, self.best_ratio_q = float(ratio[i]), int(q[i])
        # gap <= 5 q^{1/5}  <=>  gap^5 <= 3125 q, checked in integers
        self.violations += int(np.count_nonzero(g.astype(np.int64) ** 5 > 3125 * q))

    def feed(self, positions: np.ndarray) -> None:
        if len(positions) == 0:
            return
        pos = positions.astype(np.int64)
        if self.last is not None:
            pos_full = np.concatenate(([self.last], pos))
        else:
            pos_full = pos
            self.first = int(pos[0])
        self._absorb_gaps(pos_full[:-1], np.diff(pos_full))
        self.last = int(pos[-1])
        self.count += len(pos)

    def merge(self, right: "GapPartial") -> "GapPartial":
        out = GapPartial(
            first=self.first if self.first is not None else right.first,
            last=right.last if right.last is not None else self.last,
            count=self.count + right.count,
            max_gap=self.max_gap,
            records=list(self.records),
            best_ratio=self.best_ratio,
            best_ratio_q=self.best_ratio_q,
            violations=self.violations + right.violations,
        )
        if self.last is not None and right.first is not None:
            out._absorb_gaps(
                np.array([self.last], dtype=np.int64),
                np.array([right.first - self.last], dtype=np.int64),
            )
        for q, g in right.records:
            if g > out.max_gap:
                out.records.append((q, g))
                out.max_gap = g
        if right.best_ratio > out.best_ratio:
            out.best_ratio, out.best_ratio_q = right.best_ratio, right.best_ratio_q
        return out


def scan_gap_segment(lo: int, hi: int, block: int = DEFAULT_BLOCK) -> GapPartial:
    part = GapPartial()
    for start, flags in _iter_flag_blocks(lo, hi, block):
        part.feed(np.flatnonzero(flags) + start)
    return part


def gap_scan(N: int, block: int = DEFAULT_BLOCK, threads: int = 1) -> GapReport:
    """Record gaps between consecutive squarefree numbers up to N."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if threads <= 1:
        part = scan_gap_segment(1, N, block)
    else:
        from concurrent.futures import ThreadPoolExecutor

        edges = np.linspace(1, N + 1, threads + 1).astype(np.int64)
        spans = [(int(a), int(b) - 1) for a, b in zip(edges[:-1], edges[1:]) if b - 1 >= a]
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda s: scan_gap_segment(s[0], s[1], block), spans))
        part = parts[0]
        for p in parts[1:]:
            part = part.merge(p)
    return GapReport(
        limit=N,
        record_gaps=tuple(part.records),
        max_gap=part.max_gap,
        squarefree_count=part.count,
        max_fifth_root_ratio=part.best_ratio,
        argmax_fifth_root_ratio=part.best_ratio_q,
        fifth_root_violations=part.violations,
    )


@dataclass(frozen=True)
class ThetaRatios:
    theta: float
    ratios: tuple[float, ...]
    running_max: tuple[float, ...]
    max_ratio: float
    argmax_q: int
    last_ratio: float


def theta_star_ratios(report: GapReport | Iterable[tuple[int, int]], theta: float) -> ThetaRatios:
    """gap / q^theta at each record gap, with running-max summary."""
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    records = report.record_gaps if isinstance(report, GapReport) else tuple(report)
    if not records:
        raise ValueError("no record gaps")
    ratios = tuple(g / q**theta for q, g in records)
    running = tuple(np.maximum.accumulate(ratios).tolist())
    i = int(np.argmax(ratios))
    return ThetaRatios(theta, ratios, running, ratios[i], records[i][0], ratios[-1])
