import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from padic_langlands.padic_core import PadicScalar
from padic_langlands.series_ops import TruncatedSeries as T, series_log1p
from padic_langlands.mahler_analysis import (
    PolyAtom, cr_norm, dist_moment, dist_order_norm, dist_restrict, dist_restrict_oracle, dist_tempered_norm,
    loc_poly_dual_norm, mahler_from_values, pairing, sup_norm, twisted_moment, values_from_mahler,
)

P, N = 3, 6


def S(n):
    return PadicScalar.from_int(n, P, N)


def test_constant_function():
    md = mahler_from_values([1] * 6, P, N)
    assert md.a[:3] == [S(1), S(0), S(0)]
    assert values_from_mahler(md, S(-5)) == S(1)


def test_square_function():
    md = mahler_from_values([z * z for z in range(8)], P, N)
    assert md.a[:4] == [S(0), S(1), S(2), S(0)]
    assert values_from_mahler(md, 4) == S(16)
    assert values_from_mahler(md, S(-2)) == S(4)


def test_exponential_extends_continuously():
    # 4^z = (1 + 3)^z has a_n = 3^n, so the series converges at z = -1
    md = mahler_from_values([4**z for z in range(20)], P, N)
    assert [a.v for a in md.a[:5]] == [0, 1, 2, 3, 4]
    assert values_from_mahler(md, -1) == PadicScalar.from_fraction(Fraction(1, 4), P, N)


def test_cr_norms():
    md = mahler_from_values([math.comb(z, 5) for z in range(10)], P, N)
    assert cr_norm(md, 2) == pytest.approx(36)
    assert cr_norm(mahler_from_values([1] * 4, P, N), 1) == 1
    # the window edge decides: (n + 1) at n = 8
    md2 = mahler_from_values([2**z for z in range(9)], P, N)
    assert cr_norm(md2, 1) == pytest.approx(9)
    assert sup_norm(md2) == 1


def test_restriction_examples():
    one = T.one(P, N, 27)
    assert dist_restrict(one, 0, 1).agrees(one)
    assert dist_restrict(one, 1, 1).is_zero()
    assert dist_restrict(T.from_ints([1, 1], P, N, 27), 0, 1).is_zero()


def test_moments():
    dirac1 = T.from_ints([1, 1], P, N, 27)
    assert dist_moment(dirac1, 0, 1, 1) == S(1)
    assert dist_moment(dirac1, 1, 0, 0) == S(1)
    assert dist_moment(T.variable(P, N, 27), 0, 0, 0).is_zero()


def test_twisted_moments():
    dirac1 = T.from_ints([1, 1], P, N, 27)
    assert twisted_moment(dirac1, 0, 1, 1).coeffs == (1, 1)
    assert twisted_moment(T.one(P, N, 27), 0, 1, 1).coeffs[0] == 1
    assert twisted_moment(T.one(P, N, 27), 1, 1, 1).is_zero()


def test_distribution_norms():
    assert dist_tempered_norm(T.zero(P, N, 27), 0, 0, 2) == 0
    assert dist_tempered_norm(T.one(P, N, 27), 0, 0, 2) == 1
    assert dist_order_norm(T.one(P, N, 27), Fraction(1, 2)) == 1
    assert dist_order_norm(series_log1p(P, 8, 28), 1) <= 1


def test_order_norm_grows_with_window():
    # sum p^-n X^n: each longer window exposes a larger coefficient
    norms = [dist_order_norm(T.from_fractions([Fraction(1, 3**n) for n in range(M)], P, N, M), 1) for M in (4, 8, 12)]
    assert norms[0] < norms[1] < norms[2]


def test_dual_norm_of_atoms():
    assert loc_poly_dual_norm([PolyAtom(0, 0, [1])], 0, P) == 1
    assert loc_poly_dual_norm([PolyAtom(0, 2, [1])], Fraction(1, 2), P) == pytest.approx(3)
    assert loc_poly_dual_norm([PolyAtom(0, 1, [0, 3])], Fraction(1, 2), P) == pytest.approx(3**-1.5)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-3**5, 3**5), min_size=2, max_size=30))
def test_mahler_roundtrip(vals):
    md = mahler_from_values(vals, P, N + 4)
    assert all(values_from_mahler(md, z) == PadicScalar.from_int(v, P, N + 4) for z, v in enumerate(vals))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(0, 3**N - 1), min_size=27, max_size=27), st.integers(1, 2), st.integers(0, 8))
def test_restriction_matches_roots_of_unity(coeffs, n, a):
    w = T.from_ints(coeffs, P, N, 27)
    a %= P**n
    r = dist_restrict(w, a, n)
    orc = dist_restrict_oracle(w, a, n)
    from padic_langlands.padic_core import CyclotomicElement
    for i in range(27):
        x = CyclotomicElement.const(r.coeff(i), P, max(r.coeff(i).N, 1)).lift(n)
        d = x - orc[i]
        assert d.with_prec(min(d.prec, r.prec[i])).is_zero()


def test_pairing_with_constant_gives_total_mass():
    w = T.from_ints([5, 2, 7], P, N, 9)
    md = mahler_from_values([1, 1, 1], P, N)
    assert pairing(md, w) == S(5)
