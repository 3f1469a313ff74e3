from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from padic_langlands.padic_core import (
    CyclotomicElement, DomainError, PadicScalar, PrecisionError, additive_character, binom_padic,
    cyclo_pi_val, cyclo_root_power, padic_make, q_poly_int, ram_index, teichmuller, units_mod, vp,
)


def test_make_negative_valuation():
    x = padic_make(1, 3, 3, 4)
    assert (x.v, x.u) == (-1, 1)


def test_make_inverts_unit_denominator():
    x = padic_make(9, 2, 3, 4)
    assert (x.v, x.u) == (2, 41)


def test_make_zero_and_bad_denominator():
    assert padic_make(0, 1, 3, 4).is_zero()
    with pytest.raises(DomainError):
        padic_make(1, 0, 3, 4)


@pytest.mark.parametrize("a,p,N,expected", [(1, 5, 2, 1), (2, 3, 4, 80), (2, 5, 2, 7)])
def test_teichmuller(a, p, N, expected):
    assert teichmuller(a, p, N).u == expected


def test_teichmuller_rejects_non_unit():
    with pytest.raises(DomainError):
        teichmuller(3, 3, 4)


def test_binom_small_integer():
    b = binom_padic(PadicScalar.from_int(5, 3, 4), 2)
    assert b == PadicScalar.from_int(10, 3, 4)
    assert binom_padic(PadicScalar.from_int(7, 3, 4), 0) == PadicScalar.from_int(1, 3, 4)


def test_binom_fractional_argument():
    # exact value (1/3)(-2/3)/2 = -1/9, so the unit part is -1 = 8 mod 9
    b = binom_padic(padic_make(1, 3, 3, 2), 2)
    assert (b.v, b.u % 9) == (-2, 8)
    assert b.to_fraction() % 1 == Fraction(-1, 9) % 1


def test_binom_needs_spare_digits():
    with pytest.raises(PrecisionError):
        binom_padic(PadicScalar(3, 1, 0, 1), 9, 4)


def test_root_powers():
    assert cyclo_root_power(0, 1, 3, 4).coeffs == (1, 0)
    assert cyclo_root_power(1, 1, 3, 4).coeffs == (1, 1)
    one = CyclotomicElement(3, 4, 2, [1])
    assert (cyclo_root_power(9, 2, 3, 4) - one).is_zero()


def test_pi_valuations():
    pi = cyclo_root_power(1, 1, 3, 4) - CyclotomicElement(3, 4, 1, [1])
    assert cyclo_pi_val(pi * pi) == 2
    assert cyclo_pi_val(pi + pi * pi) == 1
    assert cyclo_pi_val(CyclotomicElement(3, 4, 2, [3])) == ram_index(2, 3) == 6


def test_minimal_polynomials():
    assert q_poly_int(1, 3) == (3, 3, 1)
    assert q_poly_int(2, 2) == (2, 2, 1)


def test_additive_character_trivial_on_integers():
    assert additive_character(Fraction(5), 3, 4).coeffs == (1,)
    assert additive_character(Fraction(1, 3), 3, 4).coeffs == (1, 1)


def test_units_mod():
    assert units_mod(3, 2) == [1, 2, 4, 5, 7, 8]


@settings(max_examples=60, deadline=None)
@given(st.integers(-10**6, 10**6).filter(bool), st.integers(1, 10**6), st.integers(-10**6, 10**6).filter(bool),
       st.integers(1, 10**6))
def test_field_operations_match_rationals(a, b, c, d):
    p, N = 5, 8
    x, y = padic_make(a, b, p, N), padic_make(c, d, p, N)
    exact = Fraction(a, b) * Fraction(c, d)
    prod = x * y
    assert prod.v == vp(exact.numerator, p) - vp(exact.denominator, p)
    assert prod == PadicScalar.from_fraction(exact, p, N)
    assert (x / y) * y == x.with_prec(min(x.N, y.N))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 80), st.integers(0, 80))
def test_root_powers_multiply(u, w):
    p, m, N = 3, 3, 5
    lhs = cyclo_root_power(u, m, p, N) * cyclo_root_power(w, m, p, N)
    assert (lhs - cyclo_root_power(u + w, m, p, N)).is_zero()
