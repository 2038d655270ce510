"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line,
collected again in the terminal summary."""

from __future__ import annotations

import dataclasses
import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from sqfreelab import curves, nil
from sqfreelab.arith import iroot
from sqfreelab.calibrate import calibrate_taylor, load_constants
from sqfreelab.cli import main
from sqfreelab.differencing import expansions, membership_scan
from sqfreelab.differencing.identities import F_a, F_ab, R_a, S_ab, S_hat_ab, p1_p2, p1_p2_combinations, qoppa, upsilon
from sqfreelab.sieve import Interval, count_squarefree, dyadic_scales, gap_scan, mobius_decomposition

from test_identities import _S_hat_terms, _lin, _qoppa_oracle, _random_instance, _upsilon_oracle

CONST = load_constants()


def test_c1_mobius_identity(verdict):
    rng = random.Random(1)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(100):
        X, H = rng.randint(1, 10**10), rng.randint(0, 10**4)
        iv = Interval(X, H)
        rep = mobius_decomposition(iv, 1, math.isqrt(X + H) + 1)
        bad += rep.exact_count != count_squarefree(iv) or rep.small_d_sum + rep.large_d_sum != rep.exact_count
    took = time.perf_counter() - t0
    verdict("C1 Mobius decomposition", bad == 0 and took < 60, f"{bad} mismatches in 100 intervals, {took:.1f}s")


def test_c2_density(verdict):
    N = 10**6
    c = count_squarefree(Interval(1, N - 1))
    # oracle: strike multiples of every k^2, prime or not
    flags = np.ones(N + 1, dtype=bool)
    flags[0] = False
    for k in range(2, math.isqrt(N) + 1):
        flags[:: k * k] = False
    brute = int(flags.sum())
    err = abs(c / N - 6 / math.pi**2)
    verdict("C2 density", c == brute == 607926 and err < 1e-3, f"count {c}, oracle {brute}, |c/N - 6/pi^2| = {err:.2e}")


@pytest.mark.slow
def test_c3_gap_scan(verdict, tmp_path):
    N = 10**7
    t0 = time.perf_counter()
    rep = gap_scan(N)
    took = time.perf_counter() - t0
    again = gap_scan(N)
    same = json.dumps(dataclasses.asdict(rep)) == json.dumps(dataclasses.asdict(again))
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        assert main(["gaps", "--N", str(N), "--format", "json", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    ok = rep.fifth_root_violations == 0 and same and outs[0] == outs[1] and took < 600
    verdict("C3 gap scan", ok, f"max gap/q^(1/5) = {rep.max_fifth_root_ratio:.4f} at q = "
            f"{rep.argmax_fifth_root_ratio}, violations {rep.fifth_root_violations}, {took:.1f}s")


def test_c4_differencing_exactness(verdict):
    rng = random.Random(4)
    bad = 0
    for _ in range(10**4):
        X, d, a, b0, v, l1, l2 = _random_instance(rng)
        b = rng.randint(0, d // 10)
        bad += S_hat_ab(X, d, a, b) != S_ab(X, d, a, b) - (R_a(X, d, a) - R_a(X, d + b, a))
        bad += S_hat_ab(X, d, a, b) != _lin(X, d, _S_hat_terms(d, a, b))
        bad += F_ab(X, d, a, b) != F_a(X, d, a) - F_a(X, d + b, a)
        bad += upsilon(X, d, a, b0, v, l1, l2) != _upsilon_oracle(X, d, a, b0, v, l1, l2)
        bad += qoppa(X, d, a, b0, v, l1, l2) != _qoppa_oracle(X, d, a, b0, v, l1, l2)
        bad += p1_p2(l1, l2, b0, v) != p1_p2_combinations(l1, l2, b0, v)
    pinned = p1_p2(1, 2, 1, 1)[0] == 9 == 4 - 27 + 32
    verdict("C4 differencing exactness", bad == 0 and pinned, f"{bad} mismatches over 6 x 10^4 checks, p1(1,2,1,1) = 9")


def test_c5_membership_inequalities(verdict):
    bad = rows = members = 0
    for X in (10**8, 10**10):
        H = iroot(X, 5)
        for row in membership_scan(X, H, dyadic_scales(H, math.isqrt(X))):
            rows += 1
            members += row["family_size"]
            bad += row["violations_F"] + row["violations_R"]
    verdict("C5 membership inequalities", bad == 0 and rows > 0, f"{bad} violations over {rows} families, {members} members")


def test_c6_taylor_envelopes(verdict):
    pinned = CONST["taylor"]
    fresh = calibrate_taylor()
    drift = max(abs(fresh[k] / pinned[k] - 1) for k in expansions.KINDS)
    # constants are pinned as float(max ratio), so compare in the same representation
    dominated = all(
        float(expansions.taylor_residual(kind, expansions.CALIBRATION_X, d, a, b).ratio) <= pinned[kind]
        for kind in expansions.KINDS
        for d, a, b in expansions.calibration_grid(kind)
    )
    verdict("C6 Taylor envelopes", dominated and drift <= 0.05, f"max drift {drift:.2%} against pinned constants")


def test_c7_curve_bounds(verdict):
    Cs = CONST["curves"]["C"]
    worst = {fam: curves.max_ratio(curves.validate_family(fam, 100, 1)) for fam in sorted(curves.FAMILIES)}
    c, _ = curves.witness_constant()
    ok = all(worst[f] <= Cs[f] for f in worst) and c >= CONST["curves"]["witness_c"] > 0
    detail = ", ".join(f"{f} {worst[f]:.3g}/{Cs[f]}" for f in worst) + f", witness c = {c:.3f}"
    verdict("C7 curve bounds", ok, detail)


def test_c8_well_defined(verdict):
    rng = np.random.default_rng(8)
    worst_F = worst_rt = 0.0
    for _ in range(10**4):
        g = nil.GPoint(*rng.uniform(-10, 10, 4))
        gamma = nil.GPoint(*(float(k) for k in rng.integers(-1000, 1001, 4)))
        worst_F = max(worst_F, nil.circle_dist(nil.F_of(nil.gmul(g, gamma)), nil.F_of(g)))
        c, lattice = nil.reduce(g)
        h = nil.gmul(nil.phi(c), lattice)
        worst_rt = max(worst_rt, max(abs(x - y) for x, y in zip(
            (h.t, h.x12, h.x13, h.x23), (g.t, g.x12, g.x13, g.x23))))
    verdict("C8 nilmanifold well-definedness", worst_F < 1e-9 and worst_rt < 1e-12,
            f"max F distance {worst_F:.2e}, max round-trip error {worst_rt:.2e}")


def test_c9_bracket_reconciliation(verdict):
    rng = random.Random(9)

    def coeffs(deg):
        return tuple(Fraction(rng.randint(-99, 99), rng.randint(1, 97)) for _ in range(deg + 1))

    found = []
    for _ in range(100):
        rec = nil.reconcile(nil.BracketSeq(coeffs(1), coeffs(2), coeffs(3)), 10**3)
        found.append(rec.unique)
    pinned = {"frac_neg": ("frac", -1)}[CONST["nil"]["convention"]]
    hits = sum(u == pinned for u in found)
    verdict("C9 bracket reconciliation", hits == 100, f"{hits}/100 triples reconciled uniquely by {pinned}")


@pytest.mark.slow
def test_c10_dichotomy(verdict):
    N = 10**5
    t0 = time.perf_counter()
    rep = nil.dichotomy_experiment(200, N, N**-0.25, 200, eps=CONST["nil"]["eps"], seed=0)
    took = time.perf_counter() - t0
    planted = [t for t in rep.trials if t.kind == "planted"]
    controls = [t for t in rep.trials if t.kind == "control"]
    detected = sum(not t.equidistributed and t.recovered for t in planted)
    equi = sum(t.equidistributed for t in controls)
    flags = sum(t.flagged for t in controls)
    ok = detected == len(planted) == 100 and equi >= 95 and flags == 0 and took < 300
    verdict("C10 dichotomy", ok, f"planted detected+recovered {detected}/{len(planted)}, "
            f"controls equidistributed {equi}/{len(controls)}, control flags {flags}, {took:.0f}s")
