import random
from fractions import Fraction

import pytest

from padic_langlands.padic_core import DomainError, PadicScalar, additive_character
from padic_langlands.series_ops import TruncatedSeries as T
from padic_langlands.galois_side import SmoothCharacter, FilteredModule, char_eval, make_module
from padic_langlands.mahler_analysis import CompactDistributionQp
from padic_langlands.gl2_side import (
    LocConstFunction, LocPolyFunction, central_scalar, crucial_equiv_check, fourier_qp, gl2_act,
    intertwine_constant, intertwine_constant_oracle, lattice_pairing_check, mat_mul, reflect, smooth_intertwine,
    split_components,
)
from padic_langlands.correspondence import seq_to_distributions
from padic_langlands.cli_io import intertwine_matches_oracle, random_atom_function, random_generator, random_solution
from conftest import solve

F = Fraction


def atom_fn(D, atoms, tail=None):
    return LocPolyFunction(D, "alpha", atoms, tail, 20)


def test_evaluate_single_atom():
    f = atom_fn(make_module(3, 2), [(0, 0, [1])])
    assert f.evaluate(0).coeffs == (1,)
    assert f.evaluate(F(1, 3)).is_zero()


def test_evaluate_tail():
    D = make_module(3, 2, "tame")
    f = atom_fn(D, [], (0, [1]))
    z = F(2, 9)
    expected = char_eval(D.twist, PadicScalar.from_fraction(z, 3, 20), 20) * F(1, 9)  # |z|^-1 = 1/9
    assert (f.evaluate(z) - expected).is_zero()


def test_refinement_is_invisible():
    D = make_module(3, 3)
    coarse = atom_fn(D, [(0, 0, [1, 2])])
    fine = atom_fn(D, [(1, c, [1 + 2 * c, 2]) for c in range(3)])
    assert coarse.equals(fine)
    for z in (F(0), F(4), F(5, 1), F(13)):
        assert (coarse.evaluate(z) - fine.evaluate(z)).is_zero()


def test_identity_and_central_action():
    D = make_module(3, 3, "tame")
    f = atom_fn(D, [(1, 1, [2, 1]), (0, F(1, 3), [1, -1])])
    assert gl2_act([[1, 0], [0, 1]], f).equals(f)
    for a in (F(5), F(2, 3), F(-9)):
        assert gl2_act([[a, 0], [0, a]], f).equals(f.scaled(central_scalar(f, a)))


def _proportional(a, b, pts):
    ref = next((z for z in pts if not b.evaluate(z).is_zero()), None)
    if ref is None:
        return a.is_zero()
    sa, sb = a.evaluate(ref), b.evaluate(ref)
    return all((a.evaluate(z) * sb - b.evaluate(z) * sa).is_zero() for z in pts)


@pytest.mark.parametrize("k,profile", [(3, "unramified"), (3, "tame"), (2, "tame")])
def test_antidiagonal_swaps_components(k, profile):
    D = make_module(3, k, profile)
    f = atom_fn(D, [(2, 0, [2, 1]), (1, 1, [1, -1]), (0, F(1, 9), [5, 1])])
    g = gl2_act([[0, 3], [1, 0]], f)
    f1, f2 = (atom_fn(D, a) for a in split_components(f))
    g1, g2 = (atom_fn(D, a) for a in split_components(g))
    pts = [F(x) for x in range(27)]
    assert not f1.is_zero() and not f2.is_zero()
    assert _proportional(g1, f2, pts) and _proportional(g2, f1, pts)


def test_group_law_sample():
    rng = random.Random(11)
    D = make_module(3, 3, "tame")
    for _ in range(15):
        g1, g2 = random_generator(rng, 3), random_generator(rng, 3)
        f = random_atom_function(rng, D)
        assert gl2_act(g1, gl2_act(g2, f)).equals(gl2_act(mat_mul(g1, g2), f))


def test_fourier_examples():
    h = LocConstFunction(3, [(0, 0, 1)])
    assert fourier_qp(h).equals(h)
    wide = fourier_qp(LocConstFunction(3, [(-1, 0, 1)]))
    assert wide.equals(LocConstFunction(3, [(1, 0, 3)]))


def test_fourier_of_shifted_ball():
    # transform of 1_{1+pZ_p} is x -> p^-1 e(-x) on p^-1 Z_p, with e(x) = exp(2 pi i x)
    hh = fourier_qp(LocConstFunction(3, [(1, 1, 1)]))
    for x in (F(0), F(1, 3), F(2, 3), F(4, 3)):
        expected = additive_character(-x, 3, 40, 1) * F(1, 3)
        assert (hh.evaluate(x) - expected.lift(hh.evaluate(x).m)).is_zero()
    assert hh.evaluate(F(1, 9)).is_zero()


def test_fourier_inversion():
    rng = random.Random(4)
    for _ in range(5):
        h = LocConstFunction(3, [(rng.randrange(-1, 2), F(c, 3), rng.randrange(-3, 4)) for c in range(0, 9, 4)])
        assert fourier_qp(fourier_qp(h)).equals(reflect(h))


def test_intertwine_constants():
    assert intertwine_constant(make_module(3, 3)) == F(2, 3)
    D = make_module(3, 3, "tame")
    ap, bp = F(3), F(-3)
    assert intertwine_constant(D) == (bp / (3 * ap)) ** D.m_V


def test_intertwine_constant_needs_distinct_characters():
    chi = SmoothCharacter(3, F(1, 3))
    with pytest.raises(DomainError):
        intertwine_constant(FilteredModule(3, 3, chi, SmoothCharacter(3, F(1, 3)), 4, strict=False))


@pytest.mark.parametrize("profile", ["unramified", "tame"])
def test_intertwine_constant_oracle(profile):
    D = make_module(3, 3, profile)
    for y in (F(1), F(3), F(1, 3)):
        I, target = intertwine_constant_oracle(D, y)
        assert (I - target * intertwine_constant(D)).is_zero()


def test_intertwine_zero():
    D = make_module(3, 2)
    assert smooth_intertwine(LocPolyFunction(D, "beta", [], None, 30)).is_zero()


def test_intertwine_mean_zero_ball():
    D = make_module(3, 2)
    h = LocConstFunction(3, [(0, 0, 1), (1, 0, -3)], 30)
    assert intertwine_matches_oracle(D, h, [F(x, 9) for x in range(-20, 20, 3)])


@pytest.mark.parametrize("profile", ["unramified", "tame"])
def test_intertwine_tail_carries_mass(profile):
    D = make_module(3, 2, profile)
    If = smooth_intertwine(LocPolyFunction(D, "beta", [(0, 0, [1])], None, 30))
    assert If.has_tail()
    # mass 1 times chi(-1), the sign convention of our tail formula
    assert (If.tail[1][0] - char_eval(D.twist, -1, 30)).is_zero()


def test_lattice_check_zero_and_point_mass():
    D = make_module(3, 3)
    z = T.zero(3, 4, 27)
    grid = {"levels": range(4), "centers": lambda n: [0]}
    assert lattice_pairing_check(D, z, z, 1.0, grid).ok
    rep = lattice_pairing_check(D, z, T.one(3, 4, 27), 1.0, grid)
    assert not rep.ok
    assert [v[2] for v in rep.violations] == [1, 2, 3]


def _crucial_data(args, seed=3):
    res = solve(*args)
    datum = seq_to_distributions(random_solution(res, random.Random(seed)))
    trials = [(j, y, 2) for j in range(res.D.k - 1) for y in (F(1), F(2), F(3))]
    return res.D, datum.level("alpha", 2), datum.level("beta", 2), trials


def test_crucial_zero():
    D = make_module(3, 2, "tame")
    z = CompactDistributionQp(2, T.zero(3, 4, 27))
    rep = crucial_equiv_check(D, z, z, [(0, F(1), 2)])
    assert rep.agree and all(r[3] and r[4] for r in rep.rows)


@pytest.mark.parametrize("args", [(3, 3, "tame", 4, 27, 2, 2), (3, 2, "tame", 4, 27, 2, 2),
                                  (3, 2, "unramified", 4, 27, 2, 2, "gauss")])
def test_crucial_on_solver_data(args):
    D, ma, mb, trials = _crucial_data(args)
    rep = crucial_equiv_check(D, ma, mb, trials)
    assert rep.agree and all(r[3] and r[4] for r in rep.rows)


def test_crucial_corrupted():
    D, ma, mb, trials = _crucial_data((3, 3, "tame", 4, 27, 2, 2))
    bad = CompactDistributionQp(mb.support, mb.base + T.variable(3, mb.base.N, mb.base.M))
    rep = crucial_equiv_check(D, ma, bad, trials)
    assert rep.agree and not any(r[3] for r in rep.rows)
