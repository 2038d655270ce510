"""Exact arithmetic substrate: Moebius function, segmented sieving, ||x||.

Everything here is integer or rational; no floating point is involved in any
value that is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np

Rational = Fraction

DEFAULT_BLOCK = 1 << 20

# 6/pi^2 to 50 decimals; truncation error < 1e-50.
SIX_OVER_PI_SQ = Fraction("0.60792710185402662866327677925836583342615264803348")
SIX_OVER_PI_SQ_ERROR = Fraction(1, 10**50)

# int64 headroom for vectorised paths; beyond this we fall back to Python ints.
INT64_SAFE = 1 << 62


def _require_positive(n: int, name: str = "n") -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"{name} must be an integer, got {type(n).__name__}")
    if n < 1:
        raise ValueError(f"{name} must be >= 1, got {n}")


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorisation; fine for n up to ~1e14."""
    _require_positive(n)
    n = int(n)
    out: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    p, step = 5, 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += step
        step = 6 - step
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius(n: int) -> int:
    _require_positive(n)
    exps = factorize(n)
    if any(e > 1 for e in exps.values()):
        return 0
    return -1 if len(exps) % 2 else 1


def is_squarefree(n: int) -> bool:
    return mobius(n) != 0


@lru_cache(maxsize=16)
def _prime_table(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if sieve[p]:
            sieve[p * p :: 2 * p] = False
    primes = np.flatnonzero(sieve).astype(np.int64)
    primes.flags.writeable = False
    return primes


def primes_upto(limit: int) -> np.ndarray:
    """All primes <= limit as a read-only int64 array."""
    # round the cache key up so nearby requests share a table
    key = 1 << max(int(limit), 2).bit_length()
    table = _prime_table(key)
    return table[: np.searchsorted(table, limit, side="right")]


@dataclass(frozen=True)
class MobiusBlock:
    lo: int
    hi: int
    values: np.ndarray  # int8, values[i] = mu(lo + i)

    def __post_init__(self) -> None:
        if len(self.values) != self.hi - self.lo + 1:
            raise ValueError("values length does not match [lo, hi]")
        self.values.flags.writeable = False

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise IndexError(n)
        return int(self.values[n - self.lo])

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def concat(self, other: "MobiusBlock") -> "MobiusBlock":
        if other.lo != self.hi + 1:
            raise ValueError("blocks are not adjacent")
        return MobiusBlock(self.lo, other.hi, np.concatenate([self.values, other.values]))

    def tolist(self) -> list[int]:
        return [int(v) for v in self.values]


def _check_range(lo: int, hi: int) -> None:
    if lo < 1 or hi < lo:
        raise ValueError(f"need 1 <= lo <= hi, got lo={lo}, hi={hi}")
    if hi >= INT64_SAFE:
        raise OverflowError(f"hi={hi} exceeds the 2^62 sieve width")


def mobius_block(lo: int, hi: int, block_size: int = DEFAULT_BLOCK) -> MobiusBlock:
    """mu(n) for lo <= n <= hi by a segmented sieve over primes <= sqrt(hi)."""
    _check_range(lo, hi)
    if hi - lo + 1 > block_size:
        raise ValueError(f"range of {hi - lo + 1} exceeds block size {block_size}")
    n = np.arange(lo, hi + 1, dtype=np.int64)
    rest = n.copy()
    mu = np.ones(len(n), dtype=np.int8)
    for p in primes_upto(math.isqrt(hi)):
        p = int(p)
        start = (-lo) % p
        if start >= len(n):
            continue
        mu[start::p] *= -1
        rest[start::p] //= p
        pp = p * p
        start2 = (-lo) % pp
        if start2 < len(n):
            mu[start2::pp] = 0
    # one prime factor above sqrt(hi) may survive
    mu[(rest > 1) & (mu != 0)] *= -1
    return MobiusBlock(lo, hi, mu)


def iter_mobius_blocks(lo: int, hi: int, block_size: int = DEFAULT_BLOCK) -> Iterator[MobiusBlock]:
    _check_range(lo, hi)
    start = lo
    while start <= hi:
        stop = min(hi, start + block_size - 1)
        yield mobius_block(start, stop, block_size)
        start = stop + 1


def mobius_upto(n: int) -> np.ndarray:
    """mu(0..n) with mu(0) = 0, stitched from blocks."""
    out = np.zeros(n + 1, dtype=np.int8)
    if n >= 1:
        for blk in iter_mobius_blocks(1, n):
            out[blk.lo : blk.hi + 1] = blk.values
    return out


def frac(x: Fraction) -> Fraction:
    return x - math.floor(x)


def dist_to_z(x: Fraction | int) -> Fraction:
    """||x||, the exact distance from x to the nearest integer."""
    f = frac(Fraction(x))
    return min(f, 1 - f)


def nearest_int(x: Fraction) -> int:
    """Nearest integer, ties to even (Python's round on Fraction)."""
    return round(Fraction(x))


def ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def iroot(x: int, k: int) -> int:
    """Largest integer r with r**k <= x."""
    if x < 0:
        raise ValueError("x must be non-negative")
    if x < 2:
        return x
    if k == 2:
        return math.isqrt(x)
    if x.bit_length() < 1000:
        r = int(round(x ** (1.0 / k)))
    else:
        r = 1 << (x.bit_length() // k + 1)
        while True:  # integer Newton from above
            nxt = ((k - 1) * r + x // r ** (k - 1)) // k
            if nxt >= r:
                break
            r = nxt
    while r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r
