from fractions import Fraction

import pytest

from padic_langlands.padic_core import ConfigurationError, CyclotomicElement, DomainError, PadicScalar, PrecisionError
from padic_langlands.series_ops import TruncatedSeries as T
from padic_langlands.galois_side import (
    PsiSequence, SmoothCharacter, all_characters_mod, borel_act, char_eval, fil0_check, gauss_sum, make_module,
    psi_sequence_check, wach_membership_check, zero_sequence,
)
from padic_langlands.cli_io import gauss_product_ok, quadratic_gauss_square


def one(p, N, m=0):
    return CyclotomicElement(p, N, m, [1])


def test_trivial_gauss_sum():
    assert (gauss_sum(SmoothCharacter(3), 4) - one(3, 4)).is_zero()


@pytest.mark.parametrize("p", [3, 5])
def test_gauss_products(p):
    chars = all_characters_mod(p, 1) + all_characters_mod(p, 2)
    assert len(chars) == (p - 1) + (p - 1) * p
    assert all(gauss_product_ok(chi, 4) for chi in chars)


def test_quadratic_gauss_square():
    assert (quadratic_gauss_square(3, 4) + 3).is_zero()
    assert (quadratic_gauss_square(7, 4) + 7).is_zero()


def test_char_values():
    unr = SmoothCharacter(3, Fraction(7))
    assert char_eval(unr, PadicScalar.from_int(3, 3, 4), 4).coeffs == (7,)
    quad = SmoothCharacter(3, Fraction(5), tame=1)
    assert char_eval(quad, PadicScalar.from_int(1, 3, 4), 4).coeffs == (1,)
    assert (char_eval(quad, PadicScalar.from_int(2, 3, 4), 4) + 1).is_zero()
    with pytest.raises(DomainError):
        char_eval(quad, PadicScalar.zero(3, 4), 4)


def test_module_profiles():
    D = make_module(3, 3, "tame")
    assert D.m_V == 1 and D.n_V == 1
    assert make_module(3, 2).m_V == 1 and make_module(3, 2).n_V == 0
    with pytest.raises(ConfigurationError):
        make_module(3, 2, "wild")
    with pytest.raises(ConfigurationError):
        make_module(3, 2, prefactor_rule="other")


def test_prefactor_rules_for_unramified_twist():
    lit = make_module(3, 2).prefactor(1, 1)
    assert (lit + 1).is_zero()
    g = make_module(3, 2, prefactor_rule="gauss").prefactor(1, 1)
    assert (g - 1).is_zero()


def test_fil0_zero_pair():
    D = make_module(3, 2)
    z = T.zero(3, 4, 27)
    assert fil0_check(D, z, z, 1).ok


@pytest.mark.parametrize("m", [1, 2])
def test_fil0_scaling_pair(m):
    D = make_module(3, 2)
    wa = T.variable(3, 4, 27)
    wb = wa.scale(-(3**m))  # -(alpha_p / beta_p)^m X with alpha_p = 3, beta_p = 1
    assert fil0_check(D, wa, wb, m).ok
    assert not fil0_check(D, wa, wb, m + 1).ok


def test_fil0_needs_precision():
    D = make_module(3, 2)
    z = T.zero(3, 4, 5)
    with pytest.raises(PrecisionError):
        fil0_check(D, z, z, 2)


def test_membership():
    D = make_module(3, 2)
    z = T.zero(3, 4, 27)
    assert wach_membership_check(D, z, z, 1.0, [1, 2]).ok
    big = T.from_ints([0] * 8 + [1], 3, 4, 27)
    rep = wach_membership_check(D, big, z, 0.01, [])
    assert not rep.ok and rep.reasons == ["order"]


def test_zero_sequence_passes():
    assert psi_sequence_check(zero_sequence(make_module(3, 2), 3, 27)).ok


def test_unbounded_sequence():
    D = make_module(3, 2)
    z = T.zero(3, 4, 27)
    terms = [(T.z_power(3**n, 3, 4, 27).scale(D.alpha_p ** (-n)), z) for n in range(4)]
    rep = psi_sequence_check(PsiSequence(D, terms), check_ii=False)
    assert rep.iii_ok and not rep.i_ok
    assert [round(a) for a, _ in rep.norms] == [1, 3, 9, 27]


def test_corrupted_term_localized(small_unramified):
    s = small_unramified.basis[0].copy()
    wa, wb = s.terms[1]
    s.terms[1] = (wa + T.one(3, wa.N, wa.M), wb)
    rep = psi_sequence_check(s, check_ii=False)
    assert not rep.iii_ok
    assert {n for n, *_ in rep.iii_failures} <= {0, 1}


def _dirac_sequence(D, M=81):
    return PsiSequence(D, [(T.z_power(3**n, 3, 4, M), T.z_power(2 * 3**n, 3, 4, M)) for n in range(4)])


def test_borel_identity():
    seq = _dirac_sequence(make_module(3, 2))
    assert borel_act(seq, [[1, 0], [0, 1]]).agrees(seq)


def test_borel_diag_shifts():
    seq = _dirac_sequence(make_module(3, 2))
    out = borel_act(seq, [[1, 0], [0, 3]])
    assert len(out.terms) == len(seq.terms) + 1
    for i, (wa, wb) in enumerate(seq.terms):
        assert out.terms[i + 1][0].agrees(wa) and out.terms[i + 1][1].agrees(wb)


def test_borel_unipotent_multiplies():
    seq = _dirac_sequence(make_module(3, 2))
    out = borel_act(seq, (1, 0, 1, 1))
    for i, (wa, _) in enumerate(seq.terms):
        assert out.terms[i][0].agrees(wa * T.z_power(3**i, 3, 4, 81))
