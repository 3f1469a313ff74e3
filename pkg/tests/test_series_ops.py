from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from padic_langlands.padic_core import CyclotomicElement
from padic_langlands.series_ops import (
    TruncatedSeries as T, divided_derivative, q_polynomial, series_disk_norm, series_eval_cyclotomic, series_gamma,
    series_log1p, series_order_norm, series_phi, series_psi,
)


def ints(p, N, M, xs):
    return T.from_ints(xs, p, N, M)


def test_phi_of_variable():
    assert series_phi(T.variable(2, 8, 6)).agrees(ints(2, 8, 6, [0, 2, 1]))


def test_phi_of_one():
    assert series_phi(T.one(3, 6, 5)).agrees(T.one(3, 6, 5))


def test_phi_scales_log():
    t = series_log1p(3, 6, 10)
    assert series_phi(t).agrees(t.scale(3))


def test_psi_examples():
    assert series_psi(T.one(3, 6, 9)).agrees(T.one(3, 6, 9))
    assert series_psi(ints(3, 6, 9, [1, 1])).is_zero()
    # psi(X) = -1, only exact at the reduced precision psi reports
    out = series_psi(T.variable(3, 6, 9))
    assert out.agrees(ints(3, 6, 3, [-1]))
    assert out.prec[0] < 6


@pytest.mark.parametrize("a,expected", [(1, [0, 1]), (2, [0, 2, 1]), (-1, [0, -1, 1, -1])])
def test_gamma_on_variable(a, expected):
    assert series_gamma(T.variable(3, 6, 4), a).agrees(ints(3, 6, 4, expected))


@pytest.mark.parametrize("n,p,expected", [(1, 2, [2, 1]), (2, 2, [2, 2, 1]), (1, 3, [3, 3, 1])])
def test_q_polynomials(n, p, expected):
    assert q_polynomial(n, p, 8, 5).agrees(ints(p, 8, 5, expected))


def test_log1p_head():
    t = series_log1p(3, 6, 3)
    assert t.agrees(ints(3, 6, 3, [0, 1, -pow(2, -1, 3**6)]))


def test_disk_norms():
    assert series_disk_norm(T.one(3, 4, 5), Fraction(7, 2)) == 1
    assert series_disk_norm(series_log1p(5, 6, 30), 1) == pytest.approx(1 / 5)
    assert series_disk_norm(ints(3, 4, 5, [0, 3]), 1) == pytest.approx(1 / 9)


def test_order_norms():
    assert series_order_norm(T.one(3, 4, 5), 0) == 1
    # max of (n+1)^-1 p^(v_p(n)) over 1 <= n < 28 is 27/28, at n = 27
    assert series_order_norm(series_log1p(3, 8, 28), 1) == pytest.approx(27 / 28)
    assert series_order_norm(ints(3, 4, 6, [0, 0, 0, 0, 0, 1]), 2) == pytest.approx(6**-2)


def test_evaluation_at_roots():
    assert series_eval_cyclotomic(T.variable(3, 4, 5), 1, 1).coeffs == (0, 1)
    assert series_eval_cyclotomic(q_polynomial(2, 3, 4, 10), 2, 1).is_zero()
    cube = series_eval_cyclotomic(ints(3, 4, 5, [1, 3, 3, 1]), 1, 1)
    assert (cube - CyclotomicElement(3, 4, 1, [1])).is_zero()


def test_divided_derivative():
    assert divided_derivative(ints(3, 4, 4, [0, 0, 1]), 1).agrees(ints(3, 4, 3, [0, 2]))


series = st.lists(st.integers(0, 3**6 - 1), min_size=27, max_size=27)


@settings(max_examples=30, deadline=None)
@given(series, series)
def test_phi_is_multiplicative(a, b):
    f, g = ints(3, 6, 27, a), ints(3, 6, 27, b)
    assert series_phi(f * g).agrees(series_phi(f) * series_phi(g))


@settings(max_examples=30, deadline=None)
@given(series)
def test_psi_left_inverts_phi(a):
    f = ints(3, 6, 27, a)
    assert series_psi(series_phi(f)).agrees(f)


@settings(max_examples=30, deadline=None)
@given(series, st.sampled_from([2, 4, 5, 7]))
def test_gamma_is_ring_map(a, u):
    f = ints(3, 6, 27, a)
    assert series_gamma(f * f, u).agrees(series_gamma(f, u) ** 2)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(0, 3**30 - 1), min_size=12, max_size=12), st.sampled_from([2, 4, 5]), st.sampled_from([2, 7]))
def test_gamma_composes_at_large_modulus(a, u, w):
    # p^30 is too big for the int64 route, so this exercises the Horner route
    f = ints(3, 30, 12, a)
    assert series_gamma(series_gamma(f, w), u).agrees(series_gamma(f, u * w))
