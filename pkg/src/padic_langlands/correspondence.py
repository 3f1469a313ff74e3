"""The dictionary between psi-compatible sequences and pairs of distributions on
Q_p, its consistency checks, and a finite-precision solver for candidate
sequences."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .galois_side import (
    FilteredModule,
    PsiSequence,
    act_unit,
    fil0_instance_ok,
    m_cap,
    psi_sequence_check,
    sequence_discrepancy,
)
from .gl2_side import (
    EXTRA_PREC,
    LocPolyFunction,
    act_weyl,
    integrate,
    intertwine_constant,
    module_fractions,
    smooth_intertwine,
    unit_character_sum,
    val,
)
from .mahler_analysis import CompactDistributionQp, monomial_mahler, pairing
from .modlinalg import SmithResult, kernel_log_size_oracle, smith_mod
from .padic_core import (
    INF,
    ConfigurationError,
    CyclotomicElement,
    DomainError,
    PrecisionError,
    _mul_raw,
    cyclo_root_power,
    ram_index,
    units_mod,
)
from .series_ops import TruncatedSeries, series_order_norm, series_psi


class SequenceRejected(DomainError):
    def __init__(self, msg: str, report=None):
        super().__init__(msg)
        self.report = report


def _require_distinct(D: FilteredModule):
    if not D.distinct:
        raise DomainError("the correspondence needs alpha != beta")


@dataclass
class DualDatum:
    """mu_alpha, mu_beta through their windows p^-n Z_p, n = 0..n_max, plus tail moments.

    tails[side] = (R, [int over |z| > p^R of twist(z)|z|^-1 z^j dmu_side for j = 0..k-2]).
    """

    D: FilteredModule
    alpha: list  # CompactDistributionQp with support n at index n
    beta: list
    tails: dict = field(default_factory=dict)
    m_max: int | None = None

    @property
    def n_max(self) -> int:
        return len(self.alpha) - 1

    def level(self, side: str, n: int) -> CompactDistributionQp:
        lv = self.alpha if side == "alpha" else self.beta
        if n > len(lv) - 1:
            raise PrecisionError(f"window p^-{n} Z_p beyond the datum (n_max = {len(lv) - 1})")
        return lv[max(n, 0)]

    def scaled(self, s) -> "DualDatum":
        tails = {k: (R, [x * Fraction(s) for x in v]) for k, (R, v) in self.tails.items()}
        return DualDatum(self.D, [CompactDistributionQp(d.support, d.base.scale(s)) for d in self.alpha],
                         [CompactDistributionQp(d.support, d.base.scale(s)) for d in self.beta], tails, self.m_max)


def seq_to_distributions(seq: PsiSequence, check: bool = True, tails_radius: int | None = None) -> DualDatum:
    """mu_side,n is the distribution of side_p^n w_side,n."""
    D = seq.D
    _require_distinct(D)
    if check:
        rep = psi_sequence_check(seq, seq.m_max)
        if not (rep.ii_ok and rep.iii_ok):
            raise SequenceRejected(f"sequence fails the checks: {rep.summary()}", rep)
    ap, bp = module_fractions(D)
    alpha, beta = [], []
    for n, (wa, wb) in enumerate(seq.terms):
        alpha.append(CompactDistributionQp(n, wa.scale(ap**n)))
        beta.append(CompactDistributionQp(n, wb.scale(bp**n)))
    datum = DualDatum(D, alpha, beta, {}, seq.m_max)
    if tails_radius is not None:
        datum = extend_mu(datum, tails_radius)
    return datum


def level_coherence(datum: DualDatum) -> list:
    """(side, n, index, valuation) where psi(mu_n+1) and mu_n disagree."""
    bad = []
    for side, lv in (("alpha", datum.alpha), ("beta", datum.beta)):
        for n in range(len(lv) - 1):
            for i, v, _ in series_psi(lv[n + 1].base).discrepancy(lv[n].base):
                bad.append((side, n, i, v))
    return bad


class _skip_coherence(DualDatum):
    def __init__(self, datum: DualDatum):
        super().__init__(datum.D, datum.alpha, datum.beta, datum.tails, datum.m_max)


def distributions_to_seq(datum: DualDatum, check: bool = True) -> PsiSequence:
    """w_side,n = side_p^-n mu_side,n."""
    D = datum.D
    bad = [] if isinstance(datum, _skip_coherence) else level_coherence(datum)
    if bad:
        raise SequenceRejected(f"incoherent datum: {len(bad)} coefficient(s), first {bad[0]}")
    ap, bp = module_fractions(D)
    terms = [(a.base.scale(1 / ap**n), b.base.scale(1 / bp**n))
             for n, (a, b) in enumerate(zip(datum.alpha, datum.beta))]
    seq = PsiSequence(D, terms, None, datum.m_max)
    if check:
        rep = psi_sequence_check(seq, datum.m_max)
        if not (rep.ii_ok and rep.iii_ok):
            raise SequenceRejected(f"datum does not give a valid sequence: {rep.summary()}", rep)
    return seq


@dataclass
class RoundtripReport:
    ok: bool
    discrepancies: list  # (n, side, index, valuation)

    @property
    def worst(self):
        return min((d[3] for d in self.discrepancies), default=INF)

    def summary(self) -> str:
        if self.ok:
            return "roundtrip: pass"
        return f"roundtrip: FAIL at {len(self.discrepancies)} coefficient(s), first {self.discrepancies[0]}"


def roundtrip_check(seq: PsiSequence, check: bool = True) -> RoundtripReport:
    back = distributions_to_seq(seq_to_distributions(seq, check), check=False)
    bad = sequence_discrepancy(seq, back)
    return RoundtripReport(not bad, bad)


def corrupted_roundtrip(seq: PsiSequence, index: int, delta: TruncatedSeries) -> RoundtripReport:
    """Round trip where the middle datum is perturbed at one level; failures localize there."""
    datum = seq_to_distributions(seq, check=False)
    a = datum.alpha[index]
    datum.alpha[index] = CompactDistributionQp(a.support, a.base + delta)
    back = distributions_to_seq(_skip_coherence(datum), check=False)
    bad = sequence_discrepancy(seq, back)
    return RoundtripReport(not bad, bad)


# ---------------------------------------------------------------------------
# integration against a datum


def split_at_radius(f: LocPolyFunction, R: int):
    """(compact part on p^-R Z_p, tail coefficients beyond radius R); needs f's tail cutoff <= R."""
    if not f.has_tail():
        return f, None
    T, d = f.tail
    if T > R:
        raise PrecisionError(f"tail starts at radius {T} > {R}")
    atoms = [(n, c, q) for (n, c), q in f.atoms.items()]
    for s in range(-R, -T):
        atoms.extend(f.tail_shell_atoms(s))
    compact = LocPolyFunction(f.D, f.side, atoms, None, f.prec)
    return compact, d


def _compact_integral(f: LocPolyFunction, datum: DualDatum) -> CyclotomicElement:
    if f.is_zero():
        return CyclotomicElement(f.p, f.prec, 0, [0])
    S = max(f.support_exponent(), 0)
    return integrate(f, datum.level(f.side, S))


def integrate_datum(f: LocPolyFunction, datum: DualDatum) -> CyclotomicElement:
    """int f dmu_side, with the tail handled by the stored tail moments."""
    if not f.has_tail():
        return _compact_integral(f, datum)
    if f.side not in datum.tails:
        raise PrecisionError("tail moments missing: run extend_mu first")
    R, moments = datum.tails[f.side]
    T = f.tail[0]
    k = f.k
    if T <= R:
        compact, d = split_at_radius(f, R)
        tail_val = sum((d[i] * moments[k - 2 - i] for i in range(k - 1)), CyclotomicElement(f.p, f.prec, 0, [0]))
        return _compact_integral(compact, datum) + tail_val
    # T > R: moments over |z| > p^T = stored moments minus the shells in between
    d = f.tail[1]
    acc = _compact_integral(f._copy(dict(f.atoms), None), datum)
    shells = []
    for s in range(-T, -R):
        shells.extend(f.tail_shell_atoms(s))
    between = _compact_integral(LocPolyFunction(f.D, f.side, shells, None, f.prec), datum)
    tail_val = sum((d[i] * moments[k - 2 - i] for i in range(k - 1)), CyclotomicElement(f.p, f.prec, 0, [0]))
    return acc + tail_val - between


def _monomial_on_ball(D: FilteredModule, side: str, j: int, radius: int, prec: int) -> LocPolyFunction:
    poly = [0] * (D.k - 1)
    poly[j] = 1
    return LocPolyFunction(D, side, [(-radius, 0, poly)], None, prec)


def _tail_function(D: FilteredModule, side: str, j: int, R: int, prec: int) -> LocPolyFunction:
    d = [0] * (D.k - 1)
    d[D.k - 2 - j] = 1
    return LocPolyFunction(D, side, [], (R, d), prec, canonical=False)


def extend_mu(datum: DualDatum, radius: int) -> DualDatum:
    """Tail moments beyond p^-radius Z_p for both sides, from the intertwiner identity."""
    D = datum.D
    _require_distinct(D)
    k = D.k
    prec = D.N + EXTRA_PREC
    M = radius - D.m_V + 1
    if radius > datum.n_max or M < -datum.n_max:
        raise PrecisionError(f"tail radius {radius} needs windows up to p^-{radius} Z_p")
    C = intertwine_constant(D)
    out = DualDatum(D, datum.alpha, datum.beta, dict(datum.tails), datum.m_max)
    alpha_m = []
    for j in range(k - 1):
        f = _monomial_on_ball(D, "beta", j, M, prec)
        If = smooth_intertwine(f)
        compact, d = split_at_radius(If, radius)
        rhs = _compact_integral(f, datum) * C
        lhs_compact = _compact_integral(compact, datum)
        coef = d[k - 2 - j]
        alpha_m.append((rhs - lhs_compact) * coef.as_scalar().inverse())
    out.tails["alpha"] = (radius, alpha_m)
    beta_m = []
    for j in range(k - 1):
        f = _tail_function(D, "beta", j, radius, prec)
        g = act_weyl(f)
        If = act_weyl(smooth_intertwine(g))
        beta_m.append(integrate_datum(If, out) * (1 / C))
    out.tails["beta"] = (radius, beta_m)
    return out


def tail_consistency(datum: DualDatum, side: str = "alpha") -> bool:
    """Moments at radius R equal those at R+1 plus the shell at val z = -(R+1)."""
    R, mom = datum.tails[side]
    other = extend_mu(datum, R + 1).tails[side][1]
    D = datum.D
    prec = D.N + EXTRA_PREC
    for j in range(D.k - 1):
        f = _tail_function(D, side, j, R, prec)
        shells = f.tail_shell_atoms(-(R + 1))
        shell_int = _compact_integral(LocPolyFunction(D, side, shells, None, prec), datum)
        if not (mom[j] - other[j] - shell_int).is_zero():
            return False
    return True


# ---------------------------------------------------------------------------
# Cor. identity through additive characters


def _exp_mahler(p: int, j: int, m: int, u: int, L: int, n_terms: int, K: int) -> list:
    """Mahler coefficients of z^j eta^z, eta = zeta_{p^m}^u, as level-L integer vectors mod p^K."""
    q = p**K
    e = ram_index(L, p)
    vals = []
    for z in range(n_terms):
        eta_z = cyclo_root_power(u * z * p ** (L - m), L, p, K)
        vals.append([(c * z**j) % q for c in eta_z.coeffs])
    out = []
    for n in range(n_terms):
        acc = [0] * e
        for i in range(n + 1):
            c = (-1) ** (n - i) * math.comb(n, i)
            acc = [(a + c * b) % q for a, b in zip(acc, vals[i])]
        out.append(acc)
    return out


def exp_moment(w: TruncatedSeries, j: int, m: int, u: int, L: int) -> CyclotomicElement:
    """int_{Z_p} z^j eta^z dmu for the Amice series w, by Mahler coefficients."""
    p = w.p
    e_m = ram_index(m, p)
    prec = w.tail + max(0, (w.M - j) // e_m)
    for i in range(w.M):
        prec = min(prec, w.prec[i])
    K = max(prec - min(w.shift, 0), 1) + 2
    coeffs = _exp_mahler(p, j, m, u, L, w.M, K)
    q = p**K
    e = ram_index(L, p)
    acc = [0] * e
    for i in range(w.M):
        if w.c[i]:
            acc = [(a + w.c[i] * b) % q for a, b in zip(acc, coeffs[i])]
    raw = CyclotomicElement(p, K, L, acc, w.shift)
    return raw.with_prec(prec)


@dataclass
class EquivalInstance:
    n: int
    m: int
    u: int
    y: Fraction
    identity_ok: bool
    fil0_ok: bool

    @property
    def agree(self) -> bool:
        return self.identity_ok == self.fil0_ok


@dataclass
class EquivalReport:
    instances: list

    @property
    def identities_hold(self) -> bool:
        return all(i.identity_ok for i in self.instances)

    @property
    def agree(self) -> bool:
        return all(i.agree for i in self.instances)

    @property
    def disagreements(self) -> list:
        return [i for i in self.instances if not i.agree]

    def summary(self) -> str:
        fails = sum(not i.identity_ok for i in self.instances)
        return (f"equival: {len(self.instances)} instances, {fails} failing, "
                f"{len(self.disagreements)} disagreement(s) with fil0")


def equival_sides(datum: DualDatum, j: int, y: Fraction, N: int):
    """Both sides of the identity at (j, y, N), from the level-N windows."""
    D = datum.D
    p = D.p
    m = N - val(y, p)
    unit = Fraction(y) / Fraction(p) ** val(y, p)
    u = unit.numerator * pow(unit.denominator, -1, p**m) % p**m if m > 0 else 0
    L = max(m, D.coefficient_level(), D.m_V)
    mb = exp_moment(datum.level("beta", N).base, j, m, u, L)
    ma = exp_moment(datum.level("alpha", N).base, j, m, u, L)
    ap, bp = module_fractions(D)
    scale = Fraction(1, p ** (N * j))
    H = unit_character_sum(D, y, max(ma.prec, mb.prec, 1) + 8).lift(L)
    lhs = mb * scale
    rhs = H * ma * (scale * (bp / ap) ** val(y, p))
    return lhs, rhs


def equival_check(seq: PsiSequence, m_max: int | None = None) -> EquivalReport:
    """Instances N <= n_max, m_V <= m <= m_max, y = p^(N-m) u; each is compared with fil0 at (N, m, u)."""
    D = seq.D
    p = D.p
    m_max = seq.m_max if m_max is None else m_max
    datum = seq_to_distributions(seq, check=False)
    out = []
    for N, (wa, wb) in enumerate(seq.terms):
        M = min(wa.M, wb.M)
        top = m_cap(M, p, D.N, m_max)
        for m in range(D.m_V, top + 1):
            for u in units_mod(p, m):
                y = Fraction(u, p**m) * p**N
                ok = True
                for j in range(D.k - 1):
                    lhs, rhs = equival_sides(datum, j, y, N)
                    if not (lhs - rhs).is_zero():
                        ok = False
                        break
                f_ok = fil0_instance_ok(D, wa, wb, m, u)
                out.append(EquivalInstance(N, m, u, y, ok, f_ok))
    return EquivalReport(out)


# ---------------------------------------------------------------------------
# lattice decay


@dataclass
class DecayReport:
    ok: bool
    budget: dict  # j -> C used
    naive_budget: dict  # j -> |int_{Z_p} z^j dmu_alpha|
    rows: list  # (n, j, valuation, bound, ok)

    def summary(self) -> str:
        bad = [r for r in self.rows if not r[4]]
        return f"decay: {'pass' if self.ok else 'FAIL'} on {len(self.rows)} grid points ({len(bad)} violations)"


def ball_moment(datum: DualDatum, side: str, j: int, n: int):
    """int_{p^-n Z_p} z^j dmu_side = p^-nj int_{Z_p} z^j dmu_side,n."""
    D = datum.D
    base = datum.level(side, n).base
    mom = pairing(monomial_mahler(j, 0, D.p, D.N + 4), base)
    return mom * Fraction(1, D.p ** (n * j))


def decay_check(datum: DualDatum, n_grid: int = 3, C: dict | None = None) -> DecayReport:
    """|int_{p^-n Z_p} z^j dmu_alpha| <= C p^(-n(val alpha_p - j)) for n <= n_grid, j < val alpha_p.

    The default C for each j is (j+1)^val(alpha_p) times the largest order-val(alpha_p)
    norm over the windows of the underlying sequence.
    """
    D = datum.D
    p = D.p
    va = D.val_alpha
    ap, _ = module_fractions(D)
    js = [j for j in range(min(va, D.k - 1))]
    naive = {}
    for j in js:
        m0 = ball_moment(datum, "alpha", j, 0)
        naive[j] = 0.0 if m0.v is None else float(p) ** (-m0.v)
    if C is None:
        norm = 0.0
        for n, lv in enumerate(datum.alpha):
            norm = max(norm, series_order_norm(lv.base.scale(1 / ap**n), va))
        C = {j: (j + 1) ** va * norm for j in js}
    rows = []
    ok = True
    for n in range(min(n_grid, datum.n_max) + 1):
        for j in js:
            mom = ball_moment(datum, "alpha", j, n)
            v = INF if mom.v is None else mom.v
            bound = n * (va - j)
            budget = C[j]
            good = v == INF or (budget > 0 and float(p) ** (-v) <= budget * float(p) ** (-bound) * (1 + 1e-9))
            rows.append((n, j, v, bound, good))
            ok &= good
    return DecayReport(ok, C, naive, rows)


# ---------------------------------------------------------------------------
# solver


def psi_poly_matrix(M: int, p: int, q: int) -> list:
    """Rows j < ceil(M/p) of psi on polynomials of degree < M, in the X basis, mod q."""
    out_len = -(-M // p)
    mat = [[0] * M for _ in range(out_len)]
    for i in range(M):
        for l in range(0, i + 1, p):
            c = (-1) ** (i - l) * math.comb(i, l)
            if c % q == 0:
                continue
            for j in range(min(l // p, out_len - 1) + 1):
                mat[j][i] = (mat[j][i] + c * math.comb(l // p, j)) % q
    return mat


def _int_mod(x: Fraction, q: int) -> int:
    x = Fraction(x)
    return x.numerator * pow(x.denominator, -1, q) % q


def _cyc_ints(x: CyclotomicElement, L: int, q: int) -> list:
    x = x.lift(L)
    if x.scale < 0:
        raise DomainError("non-integral cyclotomic coefficient")
    f = x.p**x.scale
    return [(c * f) % q for c in x.coeffs]


def fil0_block(D: FilteredModule, M: int, N: int, m_max: int) -> np.ndarray:
    """Rows for one window: (alpha_p^m P T_alpha(j) - beta_p^m T_beta(j)) / p^(m val beta) in pi coordinates."""
    p = D.p
    q = p**N
    ap, bp = module_fractions(D)
    vb = D.val_beta
    rows = []
    top = m_cap(M, p, N, m_max)
    for m in range(D.m_V, top + 1):
        L = max(m, D.coefficient_level())
        e = ram_index(L, p)
        ra = _int_mod(ap**m / Fraction(p) ** (m * vb), q)
        rb = _int_mod(bp**m / Fraction(p) ** (m * vb), q)
        for u in units_mod(p, m):
            t = cyclo_root_power(u * p ** (L - m), L, p, N) - 1
            tc = _cyc_ints(t, L, q)
            P = _cyc_ints(D.prefactor(m, u, N + 4), L, q)
            powers = [[1] + [0] * (e - 1)]
            for _ in range(M):
                powers.append(_mul_raw(powers[-1], tc, L, p, q))
            Pp = [_mul_raw(P, pw, L, p, q) for pw in powers]
            for j in range(D.k - 1):
                block = np.zeros((e, 2 * M), dtype=np.int64)
                for i in range(j, M):
                    b = math.comb(i, j) % q
                    if not b:
                        continue
                    for r in range(e):
                        block[r, i] = (ra * b * Pp[i - j][r]) % q
                        block[r, M + i] = (-rb * b * powers[i - j][r]) % q
                rows.append(block)
    if not rows:
        return np.zeros((0, 2 * M), dtype=np.int64)
    return np.vstack(rows) % q


@dataclass
class SolverResult:
    D: FilteredModule
    n_max: int
    M: int
    N: int
    m_max: int
    matrix: np.ndarray
    smith: SmithResult
    basis: list  # PsiSequence candidates (finite prefixes)

    @property
    def kernel_log_size(self) -> int:
        return self.smith.kernel_log_size()

    def oracle_kernel_log_sizes(self) -> list:
        """log_p |ker| over Z/p^t for t = 1..N from the independent row reducer."""
        A = [[int(x) for x in row] for row in self.matrix]
        return [kernel_log_size_oracle(A, self.D.p, t) for t in range(1, self.N + 1)]

    def smith_kernel_log_sizes(self) -> list:
        exps = self.smith.exponents
        return [sum(min(e, t) for e in exps) + t * (self.smith.ncols - len(exps)) for t in range(1, self.N + 1)]

    def contains(self, seq: PsiSequence) -> bool:
        x = sequence_to_vector(seq, self.M, self.N)
        q = self.D.p**self.N
        return not (np.asarray(self.matrix, dtype=object).dot(np.asarray(x, dtype=object)) % q).any()

    def combination(self, coeffs: Sequence[int]) -> PsiSequence:
        q = self.D.p**self.N
        vecs = self.smith.kernel_basis()
        x = np.zeros(self.smith.ncols, dtype=object)
        for c, v in zip(coeffs, vecs):
            x = (x + int(c) * v.astype(object)) % q
        return vector_to_sequence(self.D, x, self.n_max, self.M, self.N, self.m_max)


def vector_to_sequence(D: FilteredModule, x, n_max: int, M: int, N: int, m_max: int) -> PsiSequence:
    p = D.p
    terms = []
    for n in range(n_max + 1):
        a = [int(v) for v in x[2 * M * n: 2 * M * n + M]]
        b = [int(v) for v in x[2 * M * n + M: 2 * M * (n + 1)]]
        terms.append((TruncatedSeries.from_ints(a, p, N, M), TruncatedSeries.from_ints(b, p, N, M)))
    return PsiSequence(D, terms, None, m_max)


def sequence_to_vector(seq: PsiSequence, M: int, N: int) -> list:
    q = seq.p**N
    out = []
    for wa, wb in seq.terms:
        for w in (wa, wb):
            for i in range(M):
                x = w.fraction(i) if i < w.M else Fraction(0)
                out.append(_int_mod(x, q))
    return out


def check_solver_config(D: FilteredModule, M: int, N: int, m_max: int):
    p = D.p
    for m in range(D.m_V, max(m_max, D.m_V) + 1):
        e = ram_index(m, p)
        if M // e == 0:
            raise ConfigurationError(
                f"precision floor min(N, floor(M / e_m)) vanishes at m={m}: floor({M}/{e}) = 0; "
                f"increase M to at least {e} or lower m_max")


def limproj_solve(D: FilteredModule, n_max: int, M: int, N: int, m_max: int) -> SolverResult:
    """Generators of the finite-level solution module of the (ii) and (iii) conditions."""
    _require_distinct(D)
    if D.N != N:
        D = dataclasses.replace(D, N=N)
    check_solver_config(D, M, N, m_max)
    p = D.p
    q = p**N
    ap, bp = module_fractions(D)
    ai, bi = _int_mod(ap, q), _int_mod(bp, q)
    Psi = np.array(psi_poly_matrix(M, p, q), dtype=np.int64)
    h = Psi.shape[0]
    W = 2 * M
    ncols = W * (n_max + 1)
    blocks = []
    eye = np.eye(M, dtype=np.int64)[:h]
    for n in range(n_max):
        for side, c in ((0, ai), (1, bi)):
            rows = np.zeros((h, ncols), dtype=np.int64)
            rows[:, W * (n + 1) + side * M: W * (n + 1) + (side + 1) * M] = (c * Psi) % q
            rows[:, W * n + side * M: W * n + (side + 1) * M] = (-eye) % q
            blocks.append(rows)
    F = fil0_block(D, M, N, m_max)
    for n in range(n_max + 1):
        rows = np.zeros((F.shape[0], ncols), dtype=np.int64)
        rows[:, W * n: W * (n + 1)] = F
        blocks.append(rows)
    A = np.vstack(blocks) % q if blocks else np.zeros((0, ncols), dtype=np.int64)
    S = smith_mod(A, p, N)
    basis = [vector_to_sequence(D, v, n_max, M, N, m_max) for v in S.kernel_basis()]
    return SolverResult(D, n_max, M, N, m_max, A, S, basis)


def gamma_closure_ok(res: SolverResult, a: int, sample: Sequence[PsiSequence]) -> bool:
    """The unit action diag(1, a) keeps sampled solutions inside the solution module."""
    return all(res.contains(act_unit(s, a)) for s in sample)
