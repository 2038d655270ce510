"""Pair families D_a, Roth's approximate parametrization and the defect data (b0, v)."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import mpmath

from ..arith import dist_to_z, nearest_int
from ..sieve import DSet, ScaleContext
from . import identities as ident
from .inversion import breve_d, F_a_prime, F_a_real, tilde_d, InversionError

READINGS = ("consecutive", "pairs")


@dataclass(frozen=True)
class PairFamily:
    context: ScaleContext
    a: int
    members: tuple[int, ...]
    reading: str = "consecutive"
    parent: DSet | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.members)


def pair_family(dset: DSet, a: int, reading: str = "consecutive") -> PairFamily:
    """d with d, d+a in dset; under "consecutive" nothing of dset may sit strictly between."""
    if a < 1:
        raise ValueError(f"a must be >= 1, got {a}")
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    m = dset.members
    if reading == "consecutive":
        members = tuple(x for x, y in zip(m, m[1:]) if y - x == a)
    else:
        present = set(m)
        members = tuple(x for x in m if x + a in present)
    return PairFamily(dset.context, a, members, reading, dset)


# --- near-integer audit --------------------------------------------------


@dataclass(frozen=True)
class NearIntegerAudit:
    a: int
    size: int
    violations_F: tuple[int, ...]
    violations_R: tuple[int, ...]
    worst_slack_F: Fraction | None
    worst_slack_R: Fraction | None
    ties: int  # members at which some inequality holds with equality

    @property
    def ok(self) -> bool:
        return not self.violations_F and not self.violations_R


def near_integer_bounds(X: int, H: int, d: int, a: int) -> tuple[Fraction, Fraction]:
    """Exact right-hand sides for ||F_a(d)|| and ||R_a(d)||."""
    h1, h2 = Fraction(H, d * d), Fraction(H, (d + a) ** 2)
    return h1 + h2, (2 * d - a) * h1 + (2 * d + 3 * a) * h2


def near_integer_audit(family: PairFamily) -> NearIntegerAudit:
    if not family.members:
        raise ValueError("family is empty")
    X, H, a = family.context.X, family.context.H, family.a
    bad_F, bad_R = [], []
    slack_F = slack_R = None
    ties = 0
    for d in family.members:
        bF, bR = near_integer_bounds(X, H, d, a)
        sF = bF - dist_to_z(ident.F_a(X, d, a))
        sR = bR - dist_to_z(ident.R_a(X, d, a))
        if sF < 0:
            bad_F.append(d)
        if sR < 0:
            bad_R.append(d)
        if sF == 0 or sR == 0:
            ties += 1
        slack_F = sF if slack_F is None else min(slack_F, sF)
        slack_R = sR if slack_R is None else min(slack_R, sR)
    return NearIntegerAudit(a, len(family), tuple(bad_F), tuple(bad_R), slack_F, slack_R, ties)


# --- spacing -------------------------------------------------------------


def lemma_spacing_threshold(ctx: ScaleContext, a: int) -> float:
    """a^{-1/3} Delta^{5/3} (H^5/X)^{1/3}."""
    return a ** (-1 / 3) * float(ctx.Delta) ** (5 / 3) * (ctx.H**5 / ctx.X) ** (1 / 3)


def spacing_audit(family: PairFamily) -> tuple[int, float]:
    m = family.members
    if len(m) < 2:
        raise ValueError("spacing needs at least two members")
    gap = min(y - x for x, y in zip(m, m[1:]))
    return gap, gap / lemma_spacing_threshold(family.context, family.a)


# --- Roth parametrization --------------------------------------------------


@dataclass(frozen=True)
class ParamData:
    family: PairFamily
    a: int
    r_star: dict[int, int]
    R_set: tuple[int, ...]
    fibers: dict[int, tuple[int, ...]]
    d_star: dict[int, int]
    ties: tuple[int, ...]  # d with R_a(d) exactly a half-integer
    max_fiber: int
    fiber_envelope: float  # (Delta/A)^{8/3} (H^5/X)^{2/3}

    @property
    def C_prime(self) -> float:
        """Smallest C' with max_fiber <= 1 + C' * fiber_envelope."""
        return (self.max_fiber - 1) / self.fiber_envelope

    def tilde_d(self, r: int, dps: int = 50):
        lo, hi = _inversion_bracket(self.family.context, self.a)
        return tilde_d(self.family.context.X, self.a, r, (lo, hi), dps=dps)

    def tilde_d_map(self) -> dict[int, float]:
        return {r: float(self.tilde_d(r)) for r in self.R_set}


def _inversion_bracket(ctx: ScaleContext, a: int) -> tuple[int, int]:
    # R_a and F_a are monotone once t >> a; the family lives in [D, 2D]
    return max(ctx.D // 2, 10 * a, 1), 4 * ctx.D


def roth_param(family: PairFamily) -> ParamData:
    if not family.members:
        raise ValueError("family is empty")
    X, a = family.context.X, family.a
    r_star: dict[int, int] = {}
    ties = []
    fibers: dict[int, list[int]] = defaultdict(list)
    for d in family.members:
        val = ident.R_a(X, d, a)
        if (2 * val).denominator == 1 and val.denominator == 2:
            ties.append(d)
        r = nearest_int(val)
        r_star[d] = r
        fibers[r].append(d)
    fib = {r: tuple(sorted(ds)) for r, ds in fibers.items()}
    ctx = family.context
    env = float(ctx.Delta / ctx.A) ** (8 / 3) * (ctx.H**5 / ctx.X) ** (2 / 3)
    return ParamData(
        family=family,
        a=a,
        r_star=r_star,
        R_set=tuple(sorted(fib)),
        fibers=fib,
        d_star={r: ds[0] for r, ds in fib.items()},
        ties=tuple(ties),
        max_fiber=max(len(ds) for ds in fib.values()),
        fiber_envelope=env,
    )


# --- defects (b0, v) -------------------------------------------------------


@dataclass(frozen=True)
class DefectRecord:
    r: int
    l1: int
    l2: int
    d: int
    b0: Fraction
    v: Fraction

    def __post_init__(self) -> None:
        if not 0 < self.l1 < self.l2:
            raise ValueError("need 0 < l1 < l2")


def defect_record(param: ParamData, r: int, l1: int, l2: int) -> DefectRecord:
    if not 0 < l1 < l2:
        raise ValueError("need 0 < l1 < l2")
    ds = param.d_star
    missing = [s for s in (r, r + l1, r + l2) if s not in ds]
    if missing:
        raise KeyError(f"r-progression members missing from R_set: {missing}")
    d = ds[r]
    b0 = Fraction(ds[r + l1] - d, l1)
    v = ds[r + l2] - d - l2 * b0
    return DefectRecord(r, l1, l2, d, b0, v)


def defect_records(param: ParamData, l1: int, l2: int) -> list[DefectRecord]:
    """All records over R_a(l1, l2) = {r : r, r+l1, r+l2 in R_set}."""
    if not 0 < l1 < l2:
        raise ValueError("need 0 < l1 < l2")
    present = set(param.R_set)
    return [
        defect_record(param, r, l1, l2)
        for r in param.R_set
        if r + l1 in present and r + l2 in present
    ]


def defect_scan(param: ParamData, W: int) -> dict[tuple[int, int], list[DefectRecord]]:
    """Exhaustive over 1 <= l1 < l2 <= W; empty progressions are dropped."""
    out = {}
    for l1, l2 in combinations(range(1, W + 1), 2):
        recs = defect_records(param, l1, l2)
        if recs:
            out[(l1, l2)] = recs
    return out


def v_envelope(ctx: ScaleContext) -> float:
    """(Delta/G)(Delta/A)^3 + W^2 H Delta / R^2, the scale v is expected to stay under."""
    D, G, A, W, H, R = ctx.Delta, ctx.G, ctx.A, ctx.W, ctx.H, ctx.R
    return float(D / G * (D / A) ** 3 + W**2 * H * D / R**2)


# --- boosted approximation g_j ----------------------------------------------


@dataclass(frozen=True)
class BoostedRow:
    r: int
    j: int
    d_star: int
    f_tilde: float
    f_star: int
    g: float
    dist: float


@dataclass(frozen=True)
class BoostedReport:
    a: int
    rows: tuple[BoostedRow, ...]
    envelope: float  # Delta^4/H^3 (Delta/A)^2 + Delta^2/(H^2 G A)
    thresholds: tuple[float, ...]
    hits: dict[float, int]


def _check_F_monotone(ctx: ScaleContext, a: int) -> None:
    lo, hi = _inversion_bracket(ctx, a)
    with mpmath.workdps(30):
        for t in (lo, (lo + hi) / 2, hi):
            if F_a_prime(ctx.X, t, a) >= 0:
                raise InversionError("F_a is not decreasing on the inversion bracket")


def boosted_approx(
    param: ParamData,
    j: int | None = None,
    thresholds=(1e-3, 1e-2, 1e-1),
    dps: int = 50,
) -> BoostedReport:
    """g_j(r) = d(f~ + j) - d'(f~ + j){f~} with d = F_a^{-1}, f~ = F_a(R_a^{-1}(r)).

    ``j=None`` uses per r the j with floor(f~) + j = f*, f* the integer
    nearest F_a(d*(r)).
    """
    ctx = param.family.context
    X, a = ctx.X, param.a
    _check_F_monotone(ctx, a)
    bracket = _inversion_bracket(ctx, a)
    # F_a over the bracket, widened so f~ + j stays invertible
    rows = []
    with mpmath.workdps(dps):
        for r in param.R_set:
            t = tilde_d(X, a, r, bracket, dps=dps)
            ft = F_a_real(X, t, a)
            ds = param.d_star[r]
            fs = nearest_int(ident.F_a(X, ds, a))
            fl = mpmath.floor(ft)
            jj = int(fs - fl) if j is None else int(j)
            target = ft + jj
            lo, hi = bracket
            f_lo, f_hi = F_a_real(X, hi, a), F_a_real(X, lo, a)
            while target < f_lo and hi < 64 * ctx.D:
                hi *= 2
                f_lo = F_a_real(X, hi, a)
            while target > f_hi and lo > 2 * a:
                lo = max(lo // 2, 2 * a)
                f_hi = F_a_real(X, lo, a)
            db = breve_d(X, a, target, (lo, hi), dps=dps)
            g = db - (ft - fl) / F_a_prime(X, db, a)
            dist = abs(g - mpmath.nint(g))
            rows.append(BoostedRow(r, jj, ds, float(ft), fs, float(g), float(dist)))
    env = float(ctx.Delta**4 / ctx.H**3 * (ctx.Delta / ctx.A) ** 2 + ctx.Delta**2 / (ctx.H**2 * ctx.G * ctx.A))
    thr = tuple(float(x) for x in thresholds)
    hits = {x: sum(1 for row in rows if row.dist <= x) for x in thr}
    return BoostedReport(a, tuple(rows), env, thr, hits)


# --- scans ----------------------------------------------------------------------


def membership_scan(X: int, H: int, D_values, a_max: int | None = None, reading: str = "consecutive") -> list[dict]:
    """Audit every nonempty pair family at each scale D; one row per (D, a).

    ``a_max=None`` covers every gap that occurs between members.
    """
    from ..sieve import d_set

    rows = []
    for D in D_values:
        ctx = ScaleContext(X, H, D)
        ds = d_set(ctx)
        m = ds.members
        gaps = sorted({y - x for x, y in zip(m, m[1:])}) if reading == "consecutive" else range(1, (a_max or D) + 1)
        for a in gaps:
            if a_max is not None and a > a_max:
                break
            fam = pair_family(ds, a, reading)
            if not fam.members:
                continue
            audit = near_integer_audit(fam)
            param = roth_param(fam)
            spacing, ratio = spacing_audit(fam) if len(fam) >= 2 else (None, None)
            rows.append({
                "X": X, "H": H, "D": D, "a": a, "reading": reading, "dset_size": len(ds),
                "family_size": len(fam),
                "violations_F": len(audit.violations_F), "violations_R": len(audit.violations_R),
                "worst_slack_F": audit.worst_slack_F, "worst_slack_R": audit.worst_slack_R,
                "ties": audit.ties, "min_spacing": spacing, "lemma_ratio": ratio,
                "fibers": len(param.R_set), "max_fiber": param.max_fiber, "C_prime": param.C_prime,
                "half_integer_ties": len(param.ties),
            })
    return rows
