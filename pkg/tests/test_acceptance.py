"""One test per acceptance criterion, at the documented sizes and tolerances."""
import math
import random
import time
from fractions import Fraction

import pytest

from padic_langlands.padic_core import PadicScalar, vp_frac
from padic_langlands.galois_side import all_characters_mod, char_eval, make_module, psi_sequence_check
from padic_langlands.mahler_analysis import MahlerData, mahler_from_values, sup_norm, values_from_mahler
from padic_langlands.gl2_side import (
    LocPolyFunction, central_scalar, gl2_act, intertwine_constant, mat_mul, smooth_intertwine,
)
from padic_langlands.correspondence import decay_check, equival_check, roundtrip_check, seq_to_distributions
from padic_langlands.cli_io import (
    cli_dispatch, gauss_product_ok, intertwine_matches_oracle, operator_identity_failures, perturb,
    quadratic_gauss_square, random_atom_function, random_generator, random_mean_zero_h, random_series,
    random_solution, random_unit, restriction_matches_oracle,
)
from conftest import solve

F = Fraction
DEFAULT = dict(N=4, M=81, n_max=3, m_max=2)
DEFAULT_MODULES = [(k, prof) for k in (2, 3) for prof in ("unramified", "tame")]


def default_solve(k, prof):
    return solve(3, k, prof, DEFAULT["N"], DEFAULT["M"], DEFAULT["n_max"], DEFAULT["m_max"])


def test_criterion_01_operator_identities():
    rng = random.Random(101)
    start = time.perf_counter()
    failures = []
    for p in (2, 3, 5):
        for _ in range(200):
            f, g = random_series(rng, p, 8, 81), random_series(rng, p, 8, 81)
            failures += operator_identity_failures(f, g, random_unit(rng, p, 8), random_unit(rng, p, 8))
    elapsed = time.perf_counter() - start
    assert failures == []
    assert elapsed < 60, f"{elapsed:.1f}s"


def test_criterion_02_gauss_sums():
    checked = 0
    for p in (3, 5):
        for c in (1, 2):
            for chi in all_characters_mod(p, c):
                assert gauss_product_ok(chi, 4), chi
                checked += 1
    assert checked == (2 + 6) + (4 + 20)
    for p in (3, 7):
        assert (quadratic_gauss_square(p, 4) + p).is_zero()


def test_criterion_03_mahler():
    rng = random.Random(103)
    p, N = 3, 6
    for n_max in (1, 7, 20, 33, 64):
        vals = [rng.randrange(p**N) for _ in range(n_max + 1)]
        md = mahler_from_values(vals, p, N + 8)
        for z, v in enumerate(vals):
            assert values_from_mahler(md, z) == PadicScalar.from_int(v, p, N + 8)
    for _ in range(100):
        k = rng.randrange(1, 20)
        a = [PadicScalar.from_int(rng.randrange(1, p**3) * p ** rng.randrange(0, 4), p, N + 8) for _ in range(k)]
        md = MahlerData(p, N + 8, a, math.inf)
        sampled = max(values_from_mahler(md, z).abs() for z in range(32))
        assert sampled == pytest.approx(sup_norm(md), rel=1e-12)


def test_criterion_04_restriction_oracle():
    rng = random.Random(104)
    for _ in range(50):
        w = random_series(rng, 3, 4, 27)
        n = rng.randrange(0, 3)
        a = rng.randrange(3**n)
        assert restriction_matches_oracle(w, a, n), (n, a)


def test_criterion_05_fil0_double_computation():
    rng = random.Random(105)
    outputs = perturbed = 0
    perturbed_failing = 0
    disagreements = []
    for k, prof in DEFAULT_MODULES:
        res = default_solve(k, prof)
        for _ in range(5):
            rep = equival_check(random_solution(res, rng))
            outputs += 1
            assert rep.identities_hold
            disagreements += rep.disagreements
        for _ in range(5):
            s = random_solution(res, rng)
            rep = equival_check(perturb(s, rng.randrange(1, len(s.terms)), rng.randrange(1, 4)))
            perturbed += 1
            perturbed_failing += not rep.identities_hold
            disagreements += rep.disagreements
    assert (outputs, perturbed) == (20, 20)
    assert perturbed_failing == 20
    assert disagreements == []


SOLVER_CONFIGS = [
    (3, 2, "unramified", 2, 27, 2, 2),
    (3, 2, "tame", 2, 27, 2, 2),
    (3, 3, "unramified", 2, 27, 2, 2),
    (3, 3, "tame", 2, 27, 2, 2),
    (3, 4, "unramified", 2, 27, 2, 2),
    (5, 2, "unramified", 2, 25, 2, 1),
]


@pytest.mark.parametrize("config", SOLVER_CONFIGS, ids=lambda c: f"p{c[0]}-k{c[1]}-{c[2]}")
def test_criterion_06_solver_soundness(config):
    res = solve(*config)
    assert res.smith_kernel_log_sizes() == res.oracle_kernel_log_sizes()
    assert res.basis
    for s in res.basis:
        rep = psi_sequence_check(s)
        assert rep.ii_ok and rep.iii_ok
        assert roundtrip_check(s, check=False).ok


def _constant_formula(ap, bp, p, m_V, unramified):
    if unramified:
        return (1 - bp / (p * ap)) / (1 - ap / bp)
    return (bp / (p * ap)) ** m_V


def test_criterion_07_intertwining():
    rng = random.Random(107)
    modules = [make_module(p, k, prof) for p in (3, 5) for k in (2, 3, 4) for prof in ("unramified", "tame")][:10]
    assert len(modules) == 10
    for D in modules:
        ap, bp = (1 / D.alpha.value_at_p, 1 / D.beta.value_at_p)
        assert intertwine_constant(D) == _constant_formula(ap, bp, D.p, D.m_V, D.twist.is_unramified())

    for t in range(20):
        D = make_module(3, 2 + t % 2, ("unramified", "tame")[t // 2 % 2])
        h = random_mean_zero_h(rng, 3, 30)
        pts = [F(rng.randrange(-27, 27), 9) for _ in range(4)]
        assert intertwine_matches_oracle(D, h, pts), t

    wrong = []
    for t in range(10):
        D = make_module(3, 2 + t % 2, ("unramified", "tame")[t // 2 % 2])
        mass = F(rng.randrange(1, 9))
        If = smooth_intertwine(LocPolyFunction(D, "beta", [(0, 0, [mass])], None, 30))
        if If.tail is None or not (If.tail[1][D.k - 2] - mass).is_zero():
            wrong.append((D.k, D.twist.is_unramified()))
    assert wrong == []


@pytest.mark.parametrize("module", DEFAULT_MODULES, ids=lambda m: f"k{m[0]}-{m[1]}")
def test_criterion_08_lattice_decay(module):
    res = default_solve(*module)
    rng = random.Random(108)
    for _ in range(3):
        datum = seq_to_distributions(random_solution(res, rng), check=False)
        C0 = decay_check(datum, 3).naive_budget  # |int_{Z_p} z^j dmu_alpha|, the n = 0 value
        rep = decay_check(datum, 3, C=C0)
        assert rep.ok, [r for r in rep.rows if not r[4]]


def test_criterion_09_gl2_group_law_and_center():
    rng = random.Random(109)
    D = make_module(3, 3, "tame")
    for _ in range(50):
        g1, g2 = random_generator(rng, 3), random_generator(rng, 3)
        f = random_atom_function(rng, D)
        assert gl2_act(g1, gl2_act(g2, f)).equals(gl2_act(mat_mul(g1, g2), f)), (g1, g2)
    for _ in range(10):
        x = F(rng.choice([1, 2, -1, 4, 5])) * F(3) ** rng.randrange(-2, 3)
        f = random_atom_function(rng, D)
        # eps^(k-2)(x) (alpha beta)(x) |x|^-(k-1) with eps(x) = x |x|
        absx = F(3) ** -vp_frac(x, 3)
        scalar = char_eval(D.alpha * D.beta, x, 30) * (x * absx) ** (D.k - 2) * absx ** -(D.k - 1)
        assert (central_scalar(f, x) - scalar).is_zero()
        assert gl2_act(((x, 0), (0, x)), f).equals(f.scaled(scalar))


def test_criterion_10_deterministic_suite(tmp_path):
    reports = []
    for i in range(2):
        out = tmp_path / f"report{i}.json"
        start = time.perf_counter()
        rc = cli_dispatch(["suite", "--config", "default", "--seed", "0", "--report", str(out)])
        elapsed = time.perf_counter() - start
        assert elapsed < 300, f"{elapsed:.1f}s"
        reports.append(out.read_bytes())
        assert rc == 0
    assert reports[0] == reports[1]
