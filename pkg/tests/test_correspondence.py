import random
from fractions import Fraction

import numpy as np
import pytest

from padic_langlands.padic_core import ConfigurationError, DomainError
from padic_langlands.series_ops import TruncatedSeries as T
from padic_langlands.galois_side import FilteredModule, SmoothCharacter, borel_act, make_module, psi_sequence_check, zero_sequence
from padic_langlands.mahler_analysis import dist_moment
from padic_langlands.correspondence import (
    corrupted_roundtrip, distributions_to_seq, equival_check, extend_mu, gamma_closure_ok, level_coherence,
    limproj_solve, module_fractions, roundtrip_check, seq_to_distributions, tail_consistency,
)
from padic_langlands.modlinalg import kernel_log_size_oracle, smith_mod
from padic_langlands.cli_io import perturb, random_solution
from conftest import solve


def sample(res, seed=0):
    return random_solution(res, random.Random(seed))


def test_zero_sequence_gives_zero_datum():
    D = make_module(3, 2, "tame")
    datum = seq_to_distributions(zero_sequence(D, 2, 27))
    assert all(lv.base.is_zero() for lv in datum.alpha + datum.beta)
    assert all(a.is_zero() and b.is_zero() for a, b in distributions_to_seq(datum).terms)


def test_levels_are_coherent(small_tame):
    assert level_coherence(seq_to_distributions(sample(small_tame))) == []


def test_roundtrip_restores_sequence(small_tame):
    s = sample(small_tame, 1)
    assert distributions_to_seq(seq_to_distributions(s)).agrees(s)


def test_datum_scaling_is_linear(small_tame):
    s = sample(small_tame, 2)
    back = distributions_to_seq(seq_to_distributions(s.scale(5)))
    assert back.agrees(s.scale(5))


def test_dictionary_is_additive(small_tame):
    a, b = sample(small_tame, 3), sample(small_tame, 4)
    lhs = seq_to_distributions(a + b)
    da, db = seq_to_distributions(a), seq_to_distributions(b)
    for n in range(len(lhs.alpha)):
        assert lhs.alpha[n].base.agrees(da.alpha[n].base + db.alpha[n].base)
        assert lhs.beta[n].base.agrees(da.beta[n].base + db.beta[n].base)


def test_rejects_non_solution(small_tame):
    s = sample(small_tame)
    wa, wb = s.terms[1]
    s.terms[1] = (wa + T.one(3, wa.N, wa.M), wb)
    with pytest.raises(DomainError):
        seq_to_distributions(s)


def test_roundtrip_zero_and_solutions(small_unramified):
    assert roundtrip_check(zero_sequence(make_module(3, 2), 2, 27)).ok
    for s in small_unramified.basis[:10]:
        assert roundtrip_check(s).ok


def test_corrupted_middle_term_is_localized(small_unramified):
    s = sample(small_unramified, 5)
    rep = corrupted_roundtrip(s, 1, T.variable(3, 2, 27))
    assert not rep.ok
    assert {n for n, *_ in rep.discrepancies} == {1}


def test_extend_zero_datum():
    D = make_module(3, 2, "tame")
    datum = extend_mu(seq_to_distributions(zero_sequence(D, 2, 27)), 1)
    assert set(datum.tails) == {"alpha", "beta"}
    assert all(x.is_zero() for _, moments in datum.tails.values() for x in moments)


@pytest.mark.parametrize("args", [(3, 3, "tame", 4, 27, 2, 2), (3, 2, "unramified", 4, 27, 2, 2, "gauss")])
def test_extend_is_consistent_and_idempotent(args):
    datum = seq_to_distributions(sample(solve(*args), 6))
    once = extend_mu(datum, 1)
    assert tail_consistency(once) and tail_consistency(once, "beta")
    assert extend_mu(once, 1).tails == once.tails


def test_extend_needs_distinct_characters():
    chi = SmoothCharacter(3, Fraction(1, 3))
    D = FilteredModule(3, 3, chi, SmoothCharacter(3, Fraction(1, 3)), 4, strict=False)
    with pytest.raises(DomainError):
        extend_mu(seq_to_distributions(zero_sequence(D, 2, 27), check=False), 1)


def test_equival_zero():
    rep = equival_check(zero_sequence(make_module(3, 2), 2, 27))
    assert rep.identities_hold and rep.agree


@pytest.mark.parametrize("args", [(3, 2, "unramified", 4, 27, 2, 2), (3, 3, "tame", 4, 27, 2, 2)])
def test_equival_on_solutions_and_perturbations(args):
    res = solve(*args)
    good = equival_check(sample(res, 7))
    assert good.identities_hold and good.agree
    bad = equival_check(perturb(sample(res, 8), 2, 1))
    assert not bad.identities_hold and bad.agree


def test_solver_contains_zero(small_unramified):
    D = small_unramified.D
    assert small_unramified.contains(zero_sequence(D, 2, 27))


def test_solver_rank_matches_dense_oracle(small_unramified):
    res = small_unramified
    assert res.smith_kernel_log_sizes() == res.oracle_kernel_log_sizes()


def test_solver_basis_passes_checks(small_tame):
    for s in small_tame.basis[::7]:
        rep = psi_sequence_check(s)
        assert rep.ii_ok and rep.iii_ok


def test_gamma_closure(small_tame):
    picks = [sample(small_tame, i) for i in range(3)]
    assert gamma_closure_ok(small_tame, 2, picks)
    assert gamma_closure_ok(small_tame, 4, picks)


def test_solver_rejects_collapsed_floor():
    with pytest.raises(ConfigurationError, match=r"min\(N, floor\(M / e_m\)\)"):
        limproj_solve(make_module(3, 2), 2, 5, 2, 2)


def test_borel_equivariance_on_moments():
    res = solve(3, 3, "tame", 4, 27, 2, 2)
    s = sample(res, 1)
    before = seq_to_distributions(s, check=False)
    after = seq_to_distributions(borel_act(s, [[1, 0], [0, 3]]), check=False)
    ap, bp = module_fractions(res.D)
    for side, c in (("alpha", ap), ("beta", bp)):
        for n in (1, 2):
            for j in range(2):
                for r in range(2):
                    for a in range(3**r):
                        x = dist_moment(after.level(side, n).base, j, a, r)
                        y = dist_moment(before.level(side, n - 1).base, j, a, r)
                        assert (x - y * c).is_zero()


def test_smith_kernel_vectors_are_annihilated():
    rng = np.random.default_rng(0)
    A = rng.integers(0, 27, size=(7, 9))
    A[:, 3] = 3 * A[:, 0]
    res = smith_mod(A, 3, 3)
    assert res.kernel_log_size() == kernel_log_size_oracle(A.tolist(), 3, 3)
    for v in res.kernel_basis():
        assert not (A.astype(object).dot(v.astype(object)) % 27).any()
