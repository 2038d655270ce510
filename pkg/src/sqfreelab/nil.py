"""G = R x Heisenberg, its lattice quotient, and bracket-polynomial orbits.

Points carry exact Fractions whenever their inputs do, so reductions and the
invariant function F are exact on rational data; floats are accepted too.

Mal'cev coordinates (t1, t2, t3, t4) map to
    t = t1,  x12 = t2,  x23 = t3,  x13 = t2 t3 + t4.
The lattice is Gamma = Z x (integer unitriangular matrices), acting on the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .arith import dist_to_z

# --- group -----------------------------------------------------------------


@dataclass(frozen=True)
class GPoint:
    t: object
    x12: object
    x13: object
    x23: object

    def matrix(self) -> list[list]:
        return [[1, self.x12, self.x13], [0, 1, self.x23], [0, 0, 1]]

    @property
    def is_integral(self) -> bool:
        return all(float(v).is_integer() for v in (self.t, self.x12, self.x13, self.x23))


IDENTITY = GPoint(0, 0, 0, 0)


@dataclass(frozen=True)
class MalcevCoord:
    t1: object
    t2: object
    t3: object
    t4: object

    def astuple(self) -> tuple:
        return (self.t1, self.t2, self.t3, self.t4)


def phi(c: MalcevCoord) -> GPoint:
    return GPoint(c.t1, c.t2, c.t2 * c.t3 + c.t4, c.t3)


def coords_of(g: GPoint) -> MalcevCoord:
    return MalcevCoord(g.t, g.x12, g.x23, g.x13 - g.x12 * g.x23)


def gmul(g: GPoint, h: GPoint) -> GPoint:
    return GPoint(g.t + h.t, g.x12 + h.x12, g.x13 + h.x13 + g.x12 * h.x23, g.x23 + h.x23)


def ginv(g: GPoint) -> GPoint:
    return GPoint(-g.t, -g.x12, g.x12 * g.x23 - g.x13, -g.x23)


def commutator(g: GPoint, h: GPoint) -> GPoint:
    """g h g^-1 h^-1."""
    return gmul(gmul(g, h), gmul(ginv(g), ginv(h)))


def _floor(x) -> int:
    return math.floor(x)


def reduce(g: GPoint) -> tuple[MalcevCoord, GPoint]:
    """The unique c in [0,1)^4 and integral gamma with g = phi(c) gamma.

    Order: t2 and t3 from x12 and x23, then t4 from what is left of x13,
    then t1 from t.
    """
    m, n = _floor(g.x12), _floor(g.x23)
    t2, t3 = g.x12 - m, g.x23 - n
    rest = g.x13 - t2 * g.x23  # = k + t4
    k = _floor(rest)
    t4 = rest - k
    s = _floor(g.t)
    t1 = g.t - s
    return MalcevCoord(t1, t2, t3, t4), GPoint(s, m, k, n)


def _frac(x):
    return x - math.floor(x)


def F_lip(c: MalcevCoord):
    """The invariant t1 + t4 + t2 {t3} mod 1, evaluated on reduced coordinates.

    On the fundamental domain this is t1 + x13 of phi(c) mod 1. It is the
    form that is continuous across the identifications of G/Gamma.
    """
    return _frac(c.t1 + c.t4 + c.t2 * _frac(c.t3))


def F_literal(c: MalcevCoord):
    """t1 - (t4 - t2 t3) + t2 floor(t3) mod 1, kept for comparison with ``F_lip``."""
    return _frac(c.t1 - (c.t4 - c.t2 * c.t3) + c.t2 * math.floor(c.t3))


def F_of(g: GPoint):
    return F_lip(reduce(g)[0])


def circle_dist(x, y) -> float:
    d = float(x) - float(y)
    d -= round(d)
    return abs(d)


# --- bracket sequences -----------------------------------------------------------


def _poly_eval(coeffs: Sequence, n):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * n + c
    return acc


@dataclass(frozen=True)
class BracketSeq:
    """f1, f2, f3 as coefficient tuples (constant term first), degree <= 3."""

    f1: tuple
    f2: tuple
    f3: tuple

    def __post_init__(self) -> None:
        for name in ("f1", "f2", "f3"):
            coeffs = tuple(Fraction(c) for c in getattr(self, name))
            if len(coeffs) > 4:
                raise ValueError(f"{name} has degree > 3")
            # pad so the linear coefficient always exists
            coeffs += (Fraction(0),) * max(0, 2 - len(coeffs))
            object.__setattr__(self, name, coeffs)

    @property
    def alphas(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.f1[1], self.f2[1], self.f3[1])

    def values(self, n):
        return tuple(_poly_eval(f, n) for f in (self.f1, self.f2, self.f3))


def poly_orbit(seq: BracketSeq, n: int) -> GPoint:
    """g(n) = phi(f3(n), f1(n), -f2(n), 0)."""
    f1, f2, f3 = seq.values(n)
    return phi(MalcevCoord(f3, f1, -f2, Fraction(0)))


def bracket_value(seq: BracketSeq, n: int) -> Fraction:
    f1, f2, f3 = seq.values(n)
    return _frac(f3 + f1 * _frac(f2))


CONVENTIONS = (("floor", 1), ("floor", -1), ("frac", 1), ("frac", -1))


def bracket_convention(seq: BracketSeq, n: int, conv: tuple[str, int]) -> Fraction:
    """f3 + f1 * op(s f2) mod 1 for op in {floor, frac}, s in {+1, -1}."""
    op, s = conv
    f1, f2, f3 = seq.values(n)
    inner = s * f2
    inner = math.floor(inner) if op == "floor" else _frac(inner)
    return _frac(f3 + f1 * inner)


@dataclass(frozen=True)
class Reconciliation:
    distances: dict  # convention -> max circle distance over n <= N
    literal_distance: float  # F_literal against the floor(+f2) form
    matching: tuple  # conventions within tol

    @property
    def unique(self):
        return self.matching[0] if len(self.matching) == 1 else None


def reconcile(seq: BracketSeq, N: int, tol: float = 1e-9) -> Reconciliation:
    if N < 1:
        raise ValueError("N must be >= 1")
    dist = {conv: 0.0 for conv in CONVENTIONS}
    literal = 0.0
    for n in range(1, N + 1):
        c, _ = reduce(poly_orbit(seq, n))
        val = F_lip(c)
        for conv in CONVENTIONS:
            dist[conv] = max(dist[conv], circle_dist(val, bracket_convention(seq, n, conv)))
        literal = max(literal, circle_dist(F_literal(c), bracket_convention(seq, n, ("floor", 1))))
    return Reconciliation(dist, literal, tuple(c for c in CONVENTIONS if dist[c] < tol))


# --- vectorised exact evaluation --------------------------------------------------


def _common_denominator(seq: BracketSeq) -> int:
    L = 1
    for f in (seq.f1, seq.f2, seq.f3):
        for c in f:
            L = math.lcm(L, c.denominator)
    return L


def bracket_values(seq: BracketSeq, N: int, start: int = 1) -> np.ndarray:
    """frac(f3(n) + f1(n){f2(n)}) for start <= n < start + N, exact then rounded to float64."""
    L = _common_denominator(seq)
    n = np.array([int(k) for k in range(start, start + N)], dtype=object)
    P1, P2, P3 = (_poly_eval([int(c * L) for c in f], n) for f in (seq.f1, seq.f2, seq.f3))
    L2 = L * L
    num = (P3 * L + P1 * (P2 % L)) % L2
    out = np.array([x / L2 for x in num], dtype=np.float64)
    # x/L2 < 1 exactly, but can round up to 1.0
    return np.minimum(out, _BELOW_ONE)


_BELOW_ONE = np.nextafter(1.0, 0.0)


# --- discrepancy ------------------------------------------------------------------


def star_discrepancy(values):
    """max_i max(i/N - u_(i), u_(i) - (i-1)/N); exact (a Fraction) when every value is a Fraction."""
    values = list(values) if not isinstance(values, np.ndarray) else values
    if len(values) and all(isinstance(v, Fraction) for v in values):
        u = sorted(values)
        N = len(u)
        if u[0] < 0 or u[-1] >= 1:
            raise ValueError("values must lie in [0, 1)")
        return max(max(Fraction(i, N) - v, v - Fraction(i - 1, N)) for i, v in enumerate(u, 1))
    u = np.sort(np.asarray(values, dtype=np.float64))
    N = len(u)
    if N == 0:
        raise ValueError("empty sample")
    if u[0] < 0 or u[-1] >= 1:
        raise ValueError("values must lie in [0, 1)")
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - u), np.max(u - (i - 1) / N)))


def star_discrepancy_direct(values) -> float:
    """sup_t |#{u < t}/N - t| over the O(N) candidate endpoints, O(N^2) total."""
    u = [float(v) for v in values]
    N = len(u)
    best = 0.0
    for t in set(u) | {1.0}:
        below = sum(1 for v in u if v < t)
        upto = sum(1 for v in u if v <= t)
        best = max(best, abs(below / N - t), abs(upto / N - t))
    return best


def equi_test(seq: BracketSeq, N: int, delta: float) -> tuple[bool, float]:
    if N < 10:
        raise ValueError("N must be >= 10")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    D = star_discrepancy(bracket_values(seq, N))
    return D <= delta, D


# --- horizontal characters ------------------------------------------------------------


@dataclass(frozen=True, order=True)
class HorizontalChar:
    q1: int
    q2: int
    q3: int

    def __post_init__(self) -> None:
        if self.q1 == self.q2 == self.q3 == 0:
            raise ValueError("the zero character is not an obstruction")

    @property
    def height(self) -> int:
        return max(abs(self.q1), abs(self.q2), abs(self.q3))

    def pairing(self, alphas) -> Fraction:
        a1, a2, a3 = (Fraction(a) for a in alphas)
        return self.q1 * a1 + self.q2 * a2 + self.q3 * a3


@dataclass(frozen=True)
class Obstruction:
    char: HorizontalChar
    distance: Fraction


DEFAULT_EPS = 1e-4


def _shell(h: int) -> np.ndarray:
    """Canonical q (first nonzero entry positive) with max|q_i| = h, as rows."""
    r = np.arange(-h, h + 1)
    inner = np.arange(-h + 1, h)
    a = np.stack(np.meshgrid([h], r, r, indexing="ij"), -1).reshape(-1, 3)
    b = np.stack(np.meshgrid(inner, [-h, h], r, indexing="ij"), -1).reshape(-1, 3)
    c = np.stack(np.meshgrid(inner, inner, [-h, h], indexing="ij"), -1).reshape(-1, 3)
    pts = np.concatenate([a, b, c])
    q1, q2, q3 = pts.T
    canon = (q1 > 0) | ((q1 == 0) & (q2 > 0)) | ((q1 == 0) & (q2 == 0) & (q3 > 0))
    return pts[canon]


def _float_screen(exact, thr: Fraction, Q: int, max_results) -> list[Obstruction]:
    a = np.array([float(x) for x in exact])
    slack = 1e-12 * (3 * Q + 1)
    r = np.arange(-Q, Q + 1, dtype=np.float64)
    base23 = r[:, None] * a[1] + r[None, :] * a[2]
    found = []
    for q1 in range(0, Q + 1):
        v = q1 * a[0] + base23
        d = np.abs(v - np.rint(v))
        for i, j in np.argwhere(d <= float(thr) + slack):
            q2, q3 = int(i) - Q, int(j) - Q
            if q1 == 0 and (q2 < 0 or (q2 == 0 and q3 <= 0)):
                continue
            ch = HorizontalChar(q1, q2, q3)
            dist = dist_to_z(ch.pairing(exact))
            if dist <= thr:
                found.append(Obstruction(ch, dist))
    found.sort(key=lambda o: (o.char.height, o.distance, o.char))
    return found[:max_results] if max_results is not None else found


def obstruction_search(
    alphas, N: int, Q: int, eps: float = DEFAULT_EPS, max_results: int | None = 10_000
) -> list[Obstruction]:
    """All q with 0 < max|q_i| <= Q and ||q . alpha|| <= eps/N, by height then distance.

    Only one of q, -q is listed (first nonzero entry positive). Small common
    denominators are handled exactly in integers, shell by shell in height,
    stopping after the first complete shell that reaches ``max_results``.
    Otherwise a float screen with slack picks candidates over the whole box
    and each is confirmed with Fractions.
    """
    if Q < 1 or eps <= 0:
        raise ValueError("need Q >= 1 and eps > 0")
    exact = [Fraction(a) - math.floor(Fraction(a)) for a in alphas]
    thr = Fraction(eps) / N
    L = math.lcm(*(x.denominator for x in exact))
    use_int = L * (3 * Q + 1) < (1 << 62)
    if not use_int:
        return _float_screen(exact, thr, Q, max_results)
    A = np.array([int(x * L) for x in exact], dtype=np.int64)
    cut = math.floor(thr * L)  # hit iff min(r, L - r) <= thr L
    found = []
    for h in range(1, Q + 1):
        pts = _shell(h)
        r = (pts @ A) % L
        dn = np.minimum(r, L - r)
        rows = np.flatnonzero(dn <= cut)
        shell_found = [Obstruction(HorizontalChar(*(int(x) for x in pts[k])), Fraction(int(dn[k]), L))
                       for k in rows]
        shell_found.sort(key=lambda o: (o.distance, o.char))
        found.extend(shell_found)
        if max_results is not None and len(found) >= max_results:
            break
    return found


# --- dichotomy experiment ---------------------------------------------------------------

GENERIC_DEN = 1 << 64
DEFAULT_SHAPE = (1, 2, 3)


def generic_seq(rng: np.random.Generator, shape=DEFAULT_SHAPE) -> BracketSeq:
    """Coefficients uniform in [0, 1) with denominator 2^64; stand-ins for irrationals."""

    def coeffs(deg):
        return tuple(Fraction(int(rng.integers(0, 1 << 63)) * 2 + int(rng.integers(0, 2)), GENERIC_DEN)
                     for _ in range(deg + 1))

    return BracketSeq(*(coeffs(d) for d in shape))


def planted_seq(rng: np.random.Generator, q: int, shape=DEFAULT_SHAPE) -> BracketSeq:
    """Every non-constant coefficient in (1/q)Z, constants 0, alpha3 = p/q with gcd(p, q) = 1."""

    def coeffs(deg):
        return (Fraction(0),) + tuple(Fraction(int(rng.integers(0, q)), q) for _ in range(deg))

    f1, f2, f3 = (coeffs(d) for d in shape)
    units = [p for p in range(1, q) if math.gcd(p, q) == 1] or [1]
    f3 = (f3[0], Fraction(int(rng.choice(units)), q)) + f3[2:]
    return BracketSeq(f1, f2, f3)


@dataclass
class TrialRecord:
    kind: str  # "planted" or "control"
    q: int | None
    seq: BracketSeq
    D_star: float
    equidistributed: bool
    obstructions: list = field(default_factory=list)
    recovered: bool | None = None  # planted: found char with q | height
    flagged: bool = False


@dataclass
class DichotomyReport:
    N: int
    delta: float
    Q: int
    eps: float
    trials: list[TrialRecord]

    def confusion(self) -> dict:
        out = {}
        for kind in ("planted", "control"):
            rows = [t for t in self.trials if t.kind == kind]
            out[kind] = {
                "equidistributed": sum(t.equidistributed for t in rows),
                "not_equidistributed": sum(not t.equidistributed for t in rows),
                "obstruction_found": sum(bool(t.obstructions) for t in rows if not t.equidistributed),
                "flagged": sum(t.flagged for t in rows),
            }
        return out

    @property
    def flagged(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.flagged]

    def tradeoff(self) -> list[tuple[float, int]]:
        """(D*, smallest obstruction height) for each non-equidistributed trial with an obstruction."""
        return sorted((t.D_star, t.obstructions[0].char.height)
                      for t in self.trials if not t.equidistributed and t.obstructions)


def dichotomy_experiment(
    trials: int,
    N: int,
    delta: float,
    Q: int,
    eps: float = DEFAULT_EPS,
    seed: int = 0,
    q_max: int = 20,
    planted_fraction: float = 0.5,
) -> DichotomyReport:
    """Half planted (small-denominator) and half generic sequences, each tested and, if not
    equidistributed, searched for an obstruction."""
    if trials < 1 or N < 10 or Q < 1:
        raise ValueError("trials, N and Q must be positive (N >= 10)")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    n_planted = round(trials * planted_fraction)
    records = []
    for i, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        if i < n_planted:
            q = int(rng.integers(2, q_max + 1))
            seq, kind = planted_seq(rng, q), "planted"
        else:
            q, seq, kind = None, generic_seq(rng), "control"
        ok, D = equi_test(seq, N, delta)
        rec = TrialRecord(kind, q, seq, D, ok)
        if not ok:
            rec.obstructions = obstruction_search(seq.alphas, N, Q, eps)
        if kind == "planted":
            # the search also runs when the test passes, so recovery is reported either way
            obs = rec.obstructions if not ok else obstruction_search(seq.alphas, N, Q, eps)
            rec.recovered = any(o.char.height % q == 0 for o in obs)
            rec.flagged = ok or not rec.recovered
        else:
            rec.flagged = not ok and not rec.obstructions
        records.append(rec)
    return DichotomyReport(N, delta, Q, eps, records)


# --- local Taylor models ------------------------------------------------------------


@dataclass(frozen=True)
class CurveHandle:
    """A smooth curve with its scale T (|g^(j)| ~ T/N^j) and optional exact derivatives."""

    func: Callable
    T: float
    derivs: Callable[[object, int], object] | None = None  # (x, j) -> g^(j)(x)

    def derivative(self, x, j: int):
        if self.derivs is not None:
            return self.derivs(x, j)
        return mpmath.diff(self.func, mpmath.mpf(x), j)

    @classmethod
    def polynomial(cls, coeffs, T: float) -> "CurveHandle":
        cs = tuple(Fraction(c) for c in coeffs)

        def derivs(x, j):
            out = Fraction(0)
            for k in range(j, len(cs)):
                out += cs[k] * math.perm(k, j) * Fraction(x) ** (k - j)
            return out

        return cls(lambda x: _poly_eval(cs, x), T, derivs)


TAU = Fraction(1, 100)
KAPPA = Fraction(1, 10)


def _to_fraction(x) -> Fraction:
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        sign, man, exp, _ = x._mpf_  # man_exp drops the sign
        return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** int(exp)
    return Fraction(x)


@dataclass(frozen=True)
class LocalBracket:
    seq: BracketSeq  # in the shift h = n - n0
    n0: int
    window: int
    remainder: tuple[float, float, float]  # max |g_i(n0+h) - model_i(h)| over 0 <= h <= window
    envelope: float  # N^{4 kappa + tau - 1}


def smooth_to_local_bracket(
    g1: CurveHandle,
    g2: CurveHandle,
    g3: CurveHandle,
    n0: int,
    window: int,
    N: float,
    kappa: Fraction = KAPPA,
    tau: Fraction = TAU,
    scale_slack: float = 1e3,
    check_scaling: bool = True,
) -> LocalBracket:
    """Degree 1, 2, 3 Taylor models of g1, g2, g3 at n0, in the variable h = n - n0."""
    if window > N ** float(kappa):
        raise ValueError(f"window {window} exceeds N^kappa = {N ** float(kappa):.4g}")
    models = []
    remainders = []
    for g, deg in ((g1, 1), (g2, 2), (g3, 3)):
        if g.T is None:
            raise ValueError("curve handle has no scale metadata")
        ds = [g.derivative(n0, j) for j in range(deg + 1)]
        if check_scaling:
            for j in range(1, deg + 1):
                target = g.T / N**j
                size = abs(float(ds[j]))
                if target == 0 or not (target / scale_slack <= size <= target * scale_slack):
                    raise ValueError(f"derivative {j} of size {size:.3g} is not ~ T/N^{j} = {target:.3g}")
        coeffs = tuple(_to_fraction(ds[j]) / math.factorial(j) for j in range(deg + 1))
        models.append(coeffs)
        rem = 0.0
        for h in range(window + 1):
            exact = g.func(n0 + h) if g.derivs is not None else g.func(mpmath.mpf(n0 + h))
            rem = max(rem, abs(float(_to_fraction(exact) - _poly_eval(coeffs, Fraction(h)))))
        remainders.append(rem)
    env = float(N) ** float(4 * kappa + tau - 1)
    return LocalBracket(BracketSeq(*models), n0, window, tuple(remainders), env)


def measure_lipschitz(samples: int = 10**4, seed: int = 0, margin: float = 1e-3, step: float = 1e-6) -> float:
    """max |F(c) - F(c')| / |c - c'|_inf over random nearby pairs away from the domain walls."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        c = rng.uniform(margin, 1 - margin, 4)
        dc = rng.uniform(-step, step, 4)
        a = F_lip(MalcevCoord(*c))
        b = F_lip(MalcevCoord(*(c + dc)))
        worst = max(worst, circle_dist(a, b) / np.max(np.abs(dc)))
    return float(worst)
