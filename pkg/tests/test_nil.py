from __future__ import annotations

import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqfreelab import nil
from sqfreelab.calibrate import load_constants
from sqfreelab.nil import (
    IDENTITY,
    BracketSeq,
    CurveHandle,
    GPoint,
    HorizontalChar,
    MalcevCoord,
    F_lip,
    bracket_convention,
    bracket_value,
    bracket_values,
    circle_dist,
    commutator,
    coords_of,
    equi_test,
    gmul,
    ginv,
    obstruction_search,
    phi,
    poly_orbit,
    reconcile,
    reduce,
    smooth_to_local_bracket,
    star_discrepancy,
    star_discrepancy_direct,
)

CONST = load_constants()

q_small = st.fractions(min_value=-50, max_value=50, max_denominator=64)
gpoints = st.builds(GPoint, q_small, q_small, q_small, q_small)
lattice = st.builds(GPoint, *(st.integers(-1000, 1000) for _ in range(4)))


def test_phi_examples():
    assert phi(MalcevCoord(0, 0, 0, 0)) == IDENTITY
    assert phi(MalcevCoord(0.5, 0.25, 0.5, 0)).x13 == 0.125
    assert phi(MalcevCoord(0, 1, 1, -1)).x13 == 0


def test_coords_examples():
    assert coords_of(IDENTITY).astuple() == (0, 0, 0, 0)
    assert coords_of(GPoint(0, 2, 5, 2)).t4 == 1
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10**4):
        c = MalcevCoord(*rng.uniform(-100, 100, 4))
        back = coords_of(phi(c)).astuple()
        worst = max(worst, max(abs(x - y) for x, y in zip(back, c.astuple())))
    assert worst < 1e-12


def test_matrix_is_unitriangular():
    m = GPoint(Fraction(1, 3), 2, 5, 7).matrix()
    assert [m[i][i] for i in range(3)] == [1, 1, 1]
    assert m[1][0] == m[2][0] == m[2][1] == 0


def test_gmul_matches_matrix_product():
    g, h = GPoint(1, Fraction(1, 2), Fraction(3, 4), 5), GPoint(2, 3, Fraction(-1, 7), Fraction(2, 9))
    A, B = g.matrix(), h.matrix()
    prod = [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    gh = gmul(g, h)
    assert gh.matrix() == prod and gh.t == g.t + h.t


def test_commutator_is_central_generator():
    c = commutator(phi(MalcevCoord(0, 1, 0, 0)), phi(MalcevCoord(0, 0, 1, 0)))
    assert c == GPoint(0, 0, 1, 0) == phi(MalcevCoord(0, 0, 0, 1))


@given(gpoints, gpoints, gpoints)
@settings(max_examples=200)
def test_group_axioms(g, h, k):
    assert gmul(gmul(g, h), k) == gmul(g, gmul(h, k))
    assert gmul(g, ginv(g)) == IDENTITY == gmul(ginv(g), g)
    assert gmul(g, IDENTITY) == g


def test_associativity_float():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        g, h, k = (GPoint(*rng.uniform(-10, 10, 4)) for _ in range(3))
        a, b = gmul(gmul(g, h), k), gmul(g, gmul(h, k))
        assert max(abs(x - y) for x, y in zip(vars(a).values(), vars(b).values())) < 1e-12


def _in_unit_box(c: MalcevCoord) -> bool:
    return all(0 <= x < 1 for x in c.astuple())


def test_reduce_examples():
    c0 = MalcevCoord(Fraction(1, 3), Fraction(1, 2), Fraction(1, 5), Fraction(7, 9))
    c, gamma = reduce(phi(c0))
    assert c == c0 and gamma == IDENTITY
    g = phi(MalcevCoord(1.5, 2.25, -0.5, 3.75))
    c, gamma = reduce(g)
    assert _in_unit_box(c) and gamma.is_integral
    back = gmul(phi(c), gamma)
    assert max(abs(x - y) for x, y in zip(vars(back).values(), vars(g).values())) < 1e-12


@given(gpoints, lattice)
@settings(max_examples=300)
def test_reduce_canonical_and_invariant(g, gamma):
    c, lat = reduce(g)
    assert _in_unit_box(c) and lat.is_integral
    assert gmul(phi(c), lat) == g
    c2, _ = reduce(gmul(g, gamma))
    assert c2 == c
    assert F_lip(c2) == F_lip(c)


def test_F_examples():
    assert F_lip(MalcevCoord(Fraction(3, 10), 0, 0, 0)) == Fraction(3, 10)
    assert F_lip(MalcevCoord(0.5, 0.25, 0.5, 0)) == 0.625


def test_lipschitz_constant():
    measured = nil.measure_lipschitz(samples=2000, seed=5)
    assert measured <= CONST["nil"]["C_F"]


def test_poly_orbit_cases():
    seq = BracketSeq((0, 1), (0, 2), (0, 3))
    assert poly_orbit(seq, 0) == IDENTITY
    abel = BracketSeq((Fraction(1, 3), Fraction(2, 7)), (0,), (Fraction(1, 5), Fraction(3, 11), Fraction(1, 13)))
    for n in range(1, 30):
        f3 = abel.values(n)[2]
        assert F_lip(reduce(poly_orbit(abel, n))[0]) == f3 - math.floor(f3)
    cubic = BracketSeq((1, 2, 3, 4), (Fraction(1, 2), 0, Fraction(1, 3)), (5, Fraction(-1, 7), 0, 2))
    g = poly_orbit(cubic, 7)
    f1 = 1 + 2 * 7 + 3 * 49 + 4 * 343
    f2 = Fraction(1, 2) + Fraction(49, 3)
    f3 = 5 - Fraction(7, 7) + 2 * 343
    assert (g.t, g.x12, g.x23, g.x13) == (f3, f1, -f2, -f1 * f2)


def test_bracket_value_cases():
    only3 = BracketSeq((0,), (Fraction(1, 3), Fraction(2, 5)), (Fraction(1, 4), Fraction(5, 6)))
    for n in range(10):
        f3 = only3.values(n)[2]
        assert bracket_value(only3, n) == f3 - math.floor(f3)
    int2 = BracketSeq((Fraction(1, 3), Fraction(2, 5)), (1, 2, 3), (Fraction(1, 4),))
    assert bracket_value(int2, 4) == Fraction(1, 4)
    golden = Fraction(10**15 + math.isqrt(5 * 10**30), 2 * 10**15)
    seq = BracketSeq((0, 1), (0, golden), (0,))
    g3 = 3 * golden
    expected = 3 * (g3 - math.floor(g3))
    assert bracket_value(seq, 3) == expected - math.floor(expected)
    with mpmath.workdps(40):
        g = (1 + mpmath.sqrt(5)) / 2
        direct = mpmath.frac(3 * mpmath.frac(3 * g))
    assert float(bracket_value(seq, 3)) == pytest.approx(float(direct), abs=1e-12)


def test_reconcile_degenerate_cases():
    no2 = BracketSeq((Fraction(1, 3), Fraction(2, 7)), (0,), (Fraction(1, 5), Fraction(3, 11)))
    rec = reconcile(no2, 50)
    assert set(rec.matching) == set(nil.CONVENTIONS)
    no1 = BracketSeq((0,), (Fraction(1, 3), Fraction(2, 7)), (Fraction(1, 5), Fraction(3, 11)))
    assert reconcile(no1, 50).distances[("frac", -1)] == 0


def test_reconcile_random_rational_unique():
    rng = random.Random(8)
    for _ in range(5):
        coeffs = lambda deg: tuple(Fraction(rng.randint(-99, 99), rng.randint(1, 97)) for _ in range(deg + 1))
        rec = reconcile(BracketSeq(coeffs(1), coeffs(2), coeffs(3)), 200)
        assert rec.unique == ("frac", -1)
        assert rec.literal_distance > 1e-9


def test_bracket_values_exact():
    seq = BracketSeq((Fraction(1, 3), Fraction(7, 11)), (0, Fraction(5, 13), Fraction(1, 17)), (0, Fraction(2, 19), 0, Fraction(3, 23)))
    vals = bracket_values(seq, 300)
    for n in range(1, 301):
        assert vals[n - 1] == float(bracket_convention(seq, n, ("frac", 1)))
        assert vals[n - 1] == float(bracket_value(seq, n))
    assert np.all(vals < 1.0) and np.all(vals >= 0.0)


def test_star_discrepancy_cases():
    assert star_discrepancy([Fraction(0)] * 5) == 1
    for N in (1, 7, 1000):
        assert star_discrepancy([Fraction(2 * i - 1, 2 * N) for i in range(1, N + 1)]) == Fraction(1, 2 * N)
    with pytest.raises(ValueError):
        star_discrepancy([0.5, 1.0])
    with pytest.raises(ValueError):
        star_discrepancy(np.array([]))


@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=200))
@settings(max_examples=100, deadline=None)
def test_star_discrepancy_matches_direct(values):
    assert star_discrepancy(values) == pytest.approx(star_discrepancy_direct(values), abs=1e-12)


def test_star_discrepancy_direct_random():
    rng = np.random.default_rng(4)
    u = rng.random(1000)
    assert star_discrepancy(u) == pytest.approx(star_discrepancy_direct(u), abs=1e-12)


def test_weyl_discrepancy():
    N = 10**4
    g = (math.sqrt(5) - 1) / 2
    D = star_discrepancy(np.mod(np.arange(1, N + 1) * g, 1.0))
    assert D <= CONST["nil"]["weyl_C"] * math.log(N) / N


def test_equi_test_cases():
    sqrt2 = Fraction(math.isqrt(2 * 10**36), 10**18)
    ok, D = equi_test(BracketSeq((0,), (0,), (0, sqrt2)), 10**4, 0.01)
    assert ok and D < 0.01
    ok, D = equi_test(BracketSeq((0,), (0,), (0,)), 100, 0.5)
    assert not ok and D == 1
    with pytest.raises(ValueError):
        equi_test(BracketSeq((0,), (0,), (0,)), 5, 0.5)


def test_planted_alpha2_fails_equidistribution():
    rng = np.random.default_rng(12)
    gen = nil.generic_seq(rng)
    f2 = (Fraction(0), Fraction(1, 5), Fraction(0))
    seq = BracketSeq((0, Fraction(0)), f2, (Fraction(0), Fraction(0)))
    ok, D = equi_test(seq, 10**5, (10**5) ** -0.25)
    assert not ok and D > 0.5
    # alpha2 = 1/5 alongside generic alpha1, alpha3: still reported, bounded away from zero
    seq = BracketSeq(gen.f1, (Fraction(0), Fraction(1, 5)), gen.f3)
    _, D = equi_test(seq, 10**4, 0.01)
    assert D > 0


def test_rational_weyl_case_has_obstruction():
    seq = BracketSeq((0,), (0,), (0, Fraction(3, 8)))
    ok, _ = equi_test(seq, 1000, 0.05)
    assert not ok
    found = obstruction_search(seq.alphas, 1000, 20)
    assert HorizontalChar(0, 0, 8) in {o.char for o in found}


def test_obstruction_examples():
    found = obstruction_search((Fraction(1, 2), 0, 0), 100, 2)
    hits = {o.char: o.distance for o in found}
    assert hits[HorizontalChar(2, 0, 0)] == 0
    found = obstruction_search((Fraction(1, 3), Fraction(3, 7), Fraction(1, 5)), 100, 10)
    assert HorizontalChar(0, 7, 0) in {o.char for o in found}
    # ordered by height, canonical sign
    heights = [o.char.height for o in found]
    assert heights == sorted(heights)
    for o in found:
        q = (o.char.q1, o.char.q2, o.char.q3)
        assert next(x for x in q if x != 0) > 0


def test_obstruction_generic_empty():
    rng = np.random.default_rng(0)
    alphas = [Fraction(int(rng.integers(0, 2**62)), 2**62) for _ in range(3)]
    assert obstruction_search(alphas, 10**5, 10, eps=1e-4) == []


def test_obstruction_float_screen_agrees():
    rng = np.random.default_rng(3)
    big = 2**70
    alphas = [Fraction(int(rng.integers(0, 2**62)) * 256 + 1, big), Fraction(2, 7), Fraction(1, 3)]
    found = obstruction_search(alphas, 10, 25, eps=1.0)
    assert all(math.gcd(o.char.q2, 7) and o.distance <= Fraction(1, 10) for o in found)
    assert all(o.char.pairing(alphas) - math.floor(o.char.pairing(alphas)) in (o.distance, 1 - o.distance) for o in found)
    with pytest.raises(ValueError):
        obstruction_search(alphas, 10, 0)


def test_horizontal_char():
    with pytest.raises(ValueError):
        HorizontalChar(0, 0, 0)
    assert HorizontalChar(-3, 2, 1).height == 3


def test_dichotomy_small_run():
    rep = nil.dichotomy_experiment(10, 10**4, (10**4) ** -0.25, 50, seed=3)
    again = nil.dichotomy_experiment(10, 10**4, (10**4) ** -0.25, 50, seed=3)
    assert [t.D_star for t in rep.trials] == [t.D_star for t in again.trials]
    conf = rep.confusion()
    assert sum(conf["planted"][k] for k in ("equidistributed", "not_equidistributed")) == 5
    controls = [t for t in rep.trials if t.kind == "control"]
    assert all(t.equidistributed and not t.flagged for t in controls)
    for t in rep.trials:
        if t.kind == "planted" and not t.equidistributed:
            assert t.recovered
    assert all(h >= 1 for _, h in rep.tradeoff())


def test_local_bracket_polynomial_exact():
    N = 10**6
    g1 = CurveHandle.polynomial((7, Fraction(3, N)), T=3)
    g2 = CurveHandle.polynomial((1, Fraction(4, N), Fraction(5, N * N)), T=5)
    g3 = CurveHandle.polynomial((2, Fraction(1, N), Fraction(6, N * N), Fraction(2, N**3)), T=6)
    n0, window = 1000, 3
    lb = smooth_to_local_bracket(g1, g2, g3, n0, window, N, check_scaling=False)
    assert lb.remainder == (0.0, 0.0, 0.0)
    for h in range(window + 1):
        vals = lb.seq.values(h)
        assert vals == (g1.func(n0 + h), g2.func(n0 + h), g3.func(n0 + h))


def test_local_bracket_smooth_remainder_small():
    N, T = 10**6, 1e3
    g = lambda x: T * (x / N) ** 1.5
    handles = [CurveHandle(g, T) for _ in range(3)]
    lb = smooth_to_local_bracket(*handles, n0=N, window=3, N=N)
    assert max(lb.remainder) < lb.envelope


def test_local_bracket_errors():
    N = 10**6
    h = CurveHandle.polynomial((0, Fraction(1, N)), T=1)
    with pytest.raises(ValueError):
        smooth_to_local_bracket(h, h, h, 0, 10**3, N)
    bad = CurveHandle.polynomial((0, 1), T=1)  # derivative 1, far from T/N
    with pytest.raises(ValueError):
        smooth_to_local_bracket(bad, bad, bad, 0, 3, N)
    with pytest.raises(ValueError):
        smooth_to_local_bracket(CurveHandle(lambda x: x, None), h, h, 0, 3, N)


def test_circle_dist():
    assert circle_dist(0.95, 0.05) == pytest.approx(0.1)
    assert circle_dist(Fraction(1, 4), Fraction(1, 4)) == 0
