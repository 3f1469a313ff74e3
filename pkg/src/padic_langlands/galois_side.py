"""Smooth characters, Gauss sums, the filtered module D(alpha, beta) and the
checks on psi-compatible sequences, plus the Borel action on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .padic_core import (
    ConfigurationError,
    CyclotomicElement,
    DomainError,
    PadicScalar,
    PrecisionError,
    cyclo_root_power,
    ram_index,
    teichmuller_int,
    units_mod,
    vp,
)
from .series_ops import (
    TruncatedSeries,
    divided_derivative,
    series_eval_cyclotomic,
    series_gamma,
    series_order_norm,
    series_psi,
)


def _as_scalar(x, p: int, N: int) -> PadicScalar:
    if isinstance(x, PadicScalar):
        return x
    return PadicScalar.from_fraction(Fraction(x), p, N)


@lru_cache(maxsize=None)
def _wild_log_table(p: int, c: int) -> dict:
    """k with (1+p)^k = x mod p^c for x in 1 + pZ/p^c."""
    mod = p**c
    out = {}
    x = 1
    for k in range(p ** (c - 1)):
        out[x] = k
        x = x * (1 + p) % mod
    return out


class SmoothCharacter:
    """A locally constant character of Q_p^x.

    On units it is omega^tame * (wild part), where the wild part sends 1+p to
    zeta_{p^(wild_level-1)}^wild.  value_at_p is the image of p.
    """

    def __init__(self, p: int, value_at_p=1, tame: int = 0, wild: int = 0, wild_level: int = 1):
        if wild and p == 2:
            raise DomainError("wild characters are only set up for odd p")
        self.p = p
        self.value_at_p = Fraction(value_at_p) if not isinstance(value_at_p, PadicScalar) else value_at_p
        self.tame = tame % (p - 1) if p > 2 else 0
        self.wild_level = max(wild_level, 1)
        self.wild = wild % p ** (self.wild_level - 1) if self.wild_level > 1 else 0

    # structure
    @property
    def conductor(self) -> int:
        if self.wild:
            return self.wild_level - vp(self.wild, self.p)
        return 1 if self.tame else 0

    @property
    def level(self) -> int:
        """Cyclotomic level holding the unit values."""
        if not self.wild:
            return 0
        return self.wild_level - 1 - vp(self.wild, self.p)

    def is_unramified(self) -> bool:
        return self.conductor == 0

    def _lift_wild(self, c: int) -> int:
        return self.wild * self.p ** (c - self.wild_level)

    def __mul__(self, other: "SmoothCharacter") -> "SmoothCharacter":
        c = max(self.wild_level, other.wild_level)
        vp_ = _mul_values(self.value_at_p, other.value_at_p)
        return SmoothCharacter(self.p, vp_, self.tame + other.tame,
                               self._lift_wild(c) + other._lift_wild(c), c)

    def inverse(self) -> "SmoothCharacter":
        inv = 1 / self.value_at_p if not isinstance(self.value_at_p, PadicScalar) else self.value_at_p.inverse()
        return SmoothCharacter(self.p, inv, -self.tame, -self.wild, self.wild_level)

    def __eq__(self, other):
        if not isinstance(other, SmoothCharacter):
            return NotImplemented
        c = max(self.wild_level, other.wild_level)
        same_p = _values_equal(self.value_at_p, other.value_at_p)
        return (same_p and self.tame == other.tame
                and self._lift_wild(c) % self.p ** (c - 1) == other._lift_wild(c) % self.p ** (c - 1))

    def __hash__(self):
        return hash((self.p, self.tame, self.conductor))

    def __repr__(self):
        return (f"SmoothCharacter(p={self.p}, value_at_p={self.value_at_p}, tame={self.tame}, "
                f"wild={self.wild}, wild_level={self.wild_level})")

    # values
    def unit_value(self, u: int, N: int) -> CyclotomicElement:
        """chi(u) for an integer unit u, in the level-self.level ring."""
        p = self.p
        if u % p == 0:
            raise DomainError("not a unit")
        lvl = self.level
        val = CyclotomicElement(p, N, lvl, [1])
        if self.tame:
            t = pow(teichmuller_int(u % p, p, N), self.tame, p**N)
            val = CyclotomicElement(p, N, lvl, [t])
        if self.wild:
            c = self.wild_level
            mod = p**c
            om = teichmuller_int(u % p, p, c)
            principal = u * pow(om, -1, mod) % mod
            k = _wild_log_table(p, c)[principal]
            e = self.wild * k
            # zeta_{p^(c-1)}^e, written at the character's own level
            shift = c - 1 - lvl
            val = val * cyclo_root_power(e // p**shift, lvl, p, N)
        return val

    def unit_scalar(self, u: int, N: int) -> PadicScalar:
        """chi(u) when it lies in Z_p."""
        if self.level:
            raise DomainError("character value is not in Z_p")
        return self.unit_value(u, N).as_scalar()

    def p_power_value(self, v: int, N: int) -> PadicScalar:
        return _as_scalar(self.value_at_p, self.p, N) ** v

    def is_odd(self, N: int = 4) -> bool:
        return not self.unit_value(-1, N).agrees(CyclotomicElement(self.p, N, self.level, [1]))


def _mul_values(a, b):
    if isinstance(a, PadicScalar) or isinstance(b, PadicScalar):
        pa = a if isinstance(a, PadicScalar) else None
        pb = b if isinstance(b, PadicScalar) else None
        p = (pa or pb).p
        N = min(x.N for x in (pa, pb) if x is not None)
        return _as_scalar(a, p, N) * _as_scalar(b, p, N)
    return Fraction(a) * Fraction(b)


def _values_equal(a, b) -> bool:
    if isinstance(a, PadicScalar) or isinstance(b, PadicScalar):
        p = a.p if isinstance(a, PadicScalar) else b.p
        N = min(x.N for x in (a, b) if isinstance(x, PadicScalar))
        return _as_scalar(a, p, N) == _as_scalar(b, p, N)
    return Fraction(a) == Fraction(b)


def char_eval(chi: SmoothCharacter, x, N: int) -> CyclotomicElement:
    """chi(x) = value_at_p^val(x) * chi(unit part)."""
    p = chi.p
    x = _as_scalar(x, p, max(N, chi.conductor + 1))
    if x.v is None:
        raise DomainError("character at 0")
    unit = x.u % p ** max(chi.conductor, 1)
    return chi.unit_value(unit, N) * chi.p_power_value(x.v, N)


def gauss_sum(chi: SmoothCharacter, N: int) -> CyclotomicElement:
    """sum over x in (Z/p^c)^x of chi^-1(x) zeta_{p^c}^x, with c the conductor; 1 if c = 0."""
    p = chi.p
    c = chi.conductor
    if c == 0:
        return CyclotomicElement(p, N, 0, [1])
    inv = chi.inverse()
    total = CyclotomicElement(p, N, c, [0])
    for x in units_mod(p, c):
        total = total + inv.unit_value(x, N).lift(c) * cyclo_root_power(x, c, p, N)
    return total


def all_characters_mod(p: int, c: int) -> list[SmoothCharacter]:
    """Every character of (Z/p^c)^x (trivial at p)."""
    out = []
    for a in range(p - 1):
        for b in range(p ** (c - 1)) if c > 1 else [0]:
            out.append(SmoothCharacter(p, 1, a, b, c))
    return out


# ---------------------------------------------------------------------------


@dataclass
class FilteredModule:
    p: int
    k: int
    alpha: SmoothCharacter
    beta: SmoothCharacter
    N: int
    strict: bool = True
    # "unit-sum": prefactor is the literal sum over (Z/p^m_V)^x, so -1 for an unramified twist.
    # "gauss": an unramified twist gets prefactor G(1) = 1, which is what the intertwiner expects.
    prefactor_rule: str = "unit-sum"
    twist: SmoothCharacter = field(init=False)
    alpha_p: PadicScalar = field(init=False)
    beta_p: PadicScalar = field(init=False)
    m_V: int = field(init=False)
    n_V: int = field(init=False)
    gauss: CyclotomicElement = field(init=False)

    def __post_init__(self):
        N = self.N
        self.alpha_p = self.alpha.p_power_value(-1, N + 8)
        self.beta_p = self.beta.p_power_value(-1, N + 8)
        if self.alpha_p.v is None or self.beta_p.v is None:
            raise DomainError("alpha(p), beta(p) must be invertible")
        va, vb = self.alpha_p.v, self.beta_p.v
        if va + vb != self.k - 1:
            raise DomainError(f"val(alpha_p) + val(beta_p) = {va + vb}, expected k-1 = {self.k - 1}")
        if vb > va:
            raise DomainError("needs val(beta_p) <= val(alpha_p)")
        if self.strict and vb <= 0:
            raise DomainError("needs val(beta_p) > 0 (pass strict=False for the boundary profile)")
        self.twist = self.beta * self.alpha.inverse()
        self.n_V = self.twist.conductor
        self.m_V = max(self.n_V, 1)
        self.gauss = gauss_sum(self.twist, N + 4)
        if self.prefactor_rule not in ("unit-sum", "gauss"):
            raise ConfigurationError(f"unknown prefactor rule {self.prefactor_rule!r}")

    @property
    def val_alpha(self) -> int:
        return self.alpha_p.v

    @property
    def val_beta(self) -> int:
        return self.beta_p.v

    def exact_values(self) -> tuple:
        """(alpha_p, beta_p) as rationals when the characters were built from rationals."""
        out = []
        for chi, approx in ((self.alpha, self.alpha_p), (self.beta, self.beta_p)):
            if isinstance(chi.value_at_p, Fraction):
                out.append(1 / chi.value_at_p)
            else:
                out.append(_symmetric(approx))
        return tuple(out)

    @property
    def distinct(self) -> bool:
        return not (self.alpha == self.beta)

    def coefficient_level(self) -> int:
        return max(self.alpha.level, self.beta.level, self.twist.level)

    def prefactor(self, m: int, u: int, N: int | None = None) -> CyclotomicElement:
        """sum over x mod p^m_V of (beta/alpha)(x) eta^(p^(m - m_V) x), eta = zeta_{p^m}^u."""
        p = self.p
        N = self.N + 4 if N is None else N
        mV = self.m_V
        lvl = max(mV, self.twist.level)
        if self.prefactor_rule == "gauss" and self.twist.is_unramified():
            return CyclotomicElement(p, N, lvl, [1])
        total = CyclotomicElement(p, N, lvl, [0])
        for x in units_mod(p, mV):
            total = total + self.twist.unit_value(x, N).lift(lvl) * cyclo_root_power(u * x * p ** (lvl - mV), lvl, p, N)
        return total

    def describe(self) -> str:
        ap, bp = self.exact_values()
        return f"D(p={self.p}, k={self.k}, alpha_p={ap}, beta_p={bp}, m_V={self.m_V})"


def _symmetric(x: PadicScalar) -> Fraction:
    """Rational with the unit part taken in the symmetric residue range."""
    if x.v is None:
        return Fraction(0)
    mod = x.p**x.N
    u = x.u % mod
    if u > mod // 2:
        u -= mod
    return Fraction(u) * Fraction(x.p) ** x.v


def make_module(p: int, k: int, profile: str = "unramified", N: int = 4,
                prefactor_rule: str = "unit-sum") -> FilteredModule:
    """Standard test modules.

    k = 2 uses alpha_p = p, beta_p = 1 (a boundary case: beta_p is a unit).
    k >= 3 uses alpha_p = p^ceil((k-1)/2), beta_p = -p^floor((k-1)/2).
    'tame' makes beta act on units by the quadratic character omega^((p-1)/2).
    """
    if k < 2:
        raise DomainError("k >= 2")
    if k == 2:
        ap, bp = Fraction(p), Fraction(1)
    else:
        ap = Fraction(p ** ((k - 1 + 1) // 2))
        bp = Fraction(-(p ** ((k - 1) // 2)))
    if profile == "unramified":
        bt = 0
    elif profile == "tame":
        if p == 2:
            raise ConfigurationError("tame profile needs an odd prime")
        bt = (p - 1) // 2
    else:
        raise ConfigurationError(f"unknown profile {profile!r}")
    alpha = SmoothCharacter(p, 1 / ap)
    beta = SmoothCharacter(p, 1 / bp, tame=bt)
    return FilteredModule(p, k, alpha, beta, N, strict=(k > 2), prefactor_rule=prefactor_rule)


# ---------------------------------------------------------------------------
# Fil^0 conditions


def _cyc(x: PadicScalar, N: int, m: int = 0) -> CyclotomicElement:
    return CyclotomicElement.const(x, x.p, N, m)


@dataclass
class Fil0Instance:
    m: int
    u: int
    j: int
    ok: bool
    precision: int


@dataclass
class Fil0Report:
    ok: bool
    m: int
    floor: int
    failures: list = field(default_factory=list)  # (j, u)
    instances: list = field(default_factory=list)

    def summary(self) -> str:
        return f"fil0 m={self.m}: {'pass' if self.ok else 'FAIL'} ({len(self.failures)} failing (j,u))"


def precision_floor(M: int, m: int, p: int, N: int) -> int:
    return min(N, M // ram_index(m, p))


def fil0_sides(D: FilteredModule, w_alpha: TruncatedSeries, w_beta: TruncatedSeries, m: int, u: int, j: int):
    """Both sides of the twisted-moment identity at (m, u, j)."""
    lvl = max(m, D.coefficient_level())
    ta = series_eval_cyclotomic(divided_derivative(w_alpha, j), m, u).lift(lvl)
    tb = series_eval_cyclotomic(divided_derivative(w_beta, j), m, u).lift(lvl)
    P = D.prefactor(m, u, max(ta.prec, tb.prec, D.N) + 4).lift(lvl)
    big = max(ta.prec, tb.prec, 1) + 4 + abs(m * D.val_alpha)
    lhs = _cyc(D.alpha_p.with_prec(big) ** m, big, lvl) * P * ta
    rhs = _cyc(D.beta_p.with_prec(big) ** m, big, lvl) * tb
    return lhs, rhs


def fil0_check(D: FilteredModule, w_alpha: TruncatedSeries, w_beta: TruncatedSeries, m: int,
               js: Sequence[int] | None = None) -> Fil0Report:
    p = D.p
    if m < D.m_V:
        raise DomainError(f"m={m} below m_V={D.m_V}")
    M = min(w_alpha.M, w_beta.M)
    floor = precision_floor(M, m, p, D.N)
    if floor < 1:
        raise PrecisionError(f"floor min(N, M // e_m) = {floor} < 1 at m={m}; increase M")
    js = range(D.k - 1) if js is None else js
    rep = Fil0Report(True, m, floor)
    for u in units_mod(p, m):
        for j in js:
            lhs, rhs = fil0_sides(D, w_alpha, w_beta, m, u, j)
            d = lhs - rhs
            ok = d.is_zero()
            rep.instances.append(Fil0Instance(m, u, j, ok, d.prec))
            if not ok:
                rep.ok = False
                rep.failures.append((j, u))
    return rep


def fil0_instance_ok(D: FilteredModule, w_alpha, w_beta, m: int, u: int) -> bool:
    """All j at one root of unity."""
    for j in range(D.k - 1):
        lhs, rhs = fil0_sides(D, w_alpha, w_beta, m, u, j)
        if not (lhs - rhs).is_zero():
            return False
    return True


@dataclass
class MembershipReport:
    ok: bool
    reasons: list
    norms: tuple
    fil0: list


def wach_membership_check(D: FilteredModule, f_alpha: TruncatedSeries, f_beta: TruncatedSeries,
                          order_budget: float, m_range: Sequence[int]) -> MembershipReport:
    h = D.k - 1
    na = series_order_norm(f_alpha, h + D.val_alpha)
    nb = series_order_norm(f_beta, h + D.val_beta)
    reasons = []
    if na > order_budget * (1 + 1e-9) or nb > order_budget * (1 + 1e-9):
        reasons.append("order")
    reps = []
    for m in m_range:
        r = fil0_check(D, f_alpha, f_beta, m)
        reps.append(r)
        if not r.ok:
            reasons.append(f"fil0 m={m}")
    return MembershipReport(not reasons, reasons, (na, nb), reps)


# ---------------------------------------------------------------------------
# psi-compatible sequences


@dataclass
class PsiSequence:
    D: FilteredModule
    terms: list  # [(w_alpha_n, w_beta_n)]
    budget: float | None = None
    m_max: int | None = None  # highest root-of-unity level the (ii) check visits

    @property
    def n_max(self) -> int:
        return len(self.terms) - 1

    @property
    def p(self) -> int:
        return self.D.p

    def copy(self) -> "PsiSequence":
        return PsiSequence(self.D, list(self.terms), self.budget, self.m_max)

    def __add__(self, other: "PsiSequence") -> "PsiSequence":
        L = min(len(self.terms), len(other.terms))
        return PsiSequence(self.D, [(a[0] + b[0], a[1] + b[1]) for a, b in zip(self.terms[:L], other.terms[:L])],
                           self.budget, self.m_max)

    def scale(self, s) -> "PsiSequence":
        return PsiSequence(self.D, [(a.scale(s), b.scale(s)) for a, b in self.terms], self.budget, self.m_max)

    def agrees(self, other: "PsiSequence") -> bool:
        return not sequence_discrepancy(self, other)


def sequence_discrepancy(a: PsiSequence, b: PsiSequence) -> list:
    """(n, side, index, valuation) for every coefficient differing at joint precision."""
    bad = []
    for n, (x, y) in enumerate(zip(a.terms, b.terms)):
        for side, s, t in (("alpha", x[0], y[0]), ("beta", x[1], y[1])):
            for i, v, _ in s.discrepancy(t):
                bad.append((n, side, i, v))
    return bad


def zero_sequence(D: FilteredModule, n_max: int, M: int) -> PsiSequence:
    z = TruncatedSeries.zero(D.p, D.N, M)
    return PsiSequence(D, [(z, z) for _ in range(n_max + 1)])


def psi_pair(D: FilteredModule, pair):
    """psi on w_alpha e_alpha + w_beta e_beta: psi(e_alpha) = alpha_p e_alpha."""
    wa, wb = pair
    return series_psi(wa).scale(D.alpha_p), series_psi(wb).scale(D.beta_p)


def psi_power_pair(D, pair, j: int):
    for _ in range(j):
        pair = psi_pair(D, pair)
    return pair


def m_cap(M: int, p: int, N: int, m_max: int | None = None) -> int:
    m = 1
    while precision_floor(M, m + 1, p, N) >= 1 and (m_max is None or m + 1 <= m_max):
        m += 1
    return m


@dataclass
class SequenceReport:
    iii_ok: bool
    iii_failures: list
    ii_ok: bool
    ii_failures: list
    i_ok: bool
    norms: list
    budget: float
    window_limited: bool = True

    @property
    def ok(self) -> bool:
        return self.iii_ok and self.ii_ok and self.i_ok

    def summary(self) -> str:
        f = lambda b: "pass" if b else "FAIL"
        return (f"(i) {f(self.i_ok)} [window-limited, budget {self.budget:.6g}]  "
                f"(ii) {f(self.ii_ok)}  (iii) {f(self.iii_ok)}")


def psi_sequence_check(seq: PsiSequence, m_max: int | None = None, budget: float | None = None,
                       check_ii: bool = True) -> SequenceReport:
    D = seq.D
    p = D.p
    iii = []
    for n in range(seq.n_max):
        down = psi_pair(D, seq.terms[n + 1])
        for side, a, b in (("alpha", down[0], seq.terms[n][0]), ("beta", down[1], seq.terms[n][1])):
            for i, v, _ in a.discrepancy(b):
                iii.append((n, side, i, v))
    ii = []
    if m_max is None:
        m_max = seq.m_max
    if check_ii:
        for n, (wa, wb) in enumerate(seq.terms):
            M = min(wa.M, wb.M)
            top = m_cap(M, p, D.N, m_max)
            for m in range(D.m_V, top + 1):
                rep = fil0_check(D, wa, wb, m)
                ii.extend((n, m, j, u) for j, u in rep.failures)
    norms = [(series_order_norm(wa, D.val_alpha), series_order_norm(wb, D.val_beta)) for wa, wb in seq.terms]
    if budget is None:
        budget = seq.budget
    if budget is None:
        first = max(norms[0]) if norms else 0.0
        budget = max(first, 1.0) * p
    i_ok = all(max(x) <= budget * (1 + 1e-9) for x in norms)
    return SequenceReport(not iii, iii, not ii, ii, i_ok, norms, budget)


# ---------------------------------------------------------------------------
# Borel action


def _unit_char_scalar(chi: SmoothCharacter, a: int, N: int) -> PadicScalar:
    return chi.unit_scalar(a, N)


def _window_pairs(seq: PsiSequence):
    return list(seq.terms)


def act_psi_power(seq: PsiSequence, j: int) -> PsiSequence:
    """diag(1, p^j): (gv)_i = v_(i-j), negative indices filled by psi^(j-i)(v_0)."""
    D = seq.D
    L = seq.n_max
    out = []
    if j >= 0:
        for i in range(L + j + 1):
            if i >= j:
                out.append(seq.terms[i - j])
            else:
                out.append(psi_power_pair(D, seq.terms[0], j - i))
    else:
        if L + j < 0:
            raise PrecisionError("window underflow for diag(1, p^j)")
        out = [seq.terms[i - j] for i in range(L + j + 1)]
    return PsiSequence(D, out, seq.budget, seq.m_max)


def act_unit(seq: PsiSequence, a: int) -> PsiSequence:
    """diag(1, a): gamma_(a^-1) on each term, times alpha(a^-1), beta(a^-1)."""
    D = seq.D
    p = D.p
    if a % p == 0:
        raise DomainError("a must be a unit")
    out = []
    for wa, wb in seq.terms:
        K = max(max(wa.prec), max(wb.prec)) - min(wa.shift, wb.shift, 0) + 8 + len(bin(max(wa.M, wb.M)))
        inv = PadicScalar(p, K, 0, pow(a, -1, p**K))
        ca = D.alpha.unit_scalar(a, K).inverse()
        cb = D.beta.unit_scalar(a, K).inverse()
        out.append((series_gamma(wa, inv).scale(ca), series_gamma(wb, inv).scale(cb)))
    return PsiSequence(D, out, seq.budget, seq.m_max)


def act_unipotent(seq: PsiSequence, z) -> PsiSequence:
    """[[1, z], [0, 1]]: (gv)_i = psi^J((1+X)^(p^(i+J) z) v_(i+J)), i + J >= -val(z)."""
    D = seq.D
    p = D.p
    z = Fraction(z)
    if z == 0:
        return seq
    vz = vp(z.numerator, p) - vp(z.denominator, p)
    out = []
    for i in range(seq.n_max + 1):
        J = max(0, -vz - i)
        if i + J > seq.n_max:
            break
        wa, wb = seq.terms[i + J]
        expo = z * p ** (i + J)
        M = max(wa.M, wb.M)
        K = max(max(wa.prec), max(wb.prec)) - min(wa.shift, wb.shift, 0) + 4
        e = PadicScalar.from_fraction(expo, p, K + 4 + len(bin(M)))
        g = TruncatedSeries.z_power(e, p, K, M)
        out.append(psi_power_pair(D, (wa * g, wb * g), J))
    if not out:
        raise PrecisionError("window underflow for the unipotent action")
    return PsiSequence(D, out, seq.budget, seq.m_max)


def act_central(seq: PsiSequence, x, chi: SmoothCharacter | None = None) -> PsiSequence:
    if chi is None:
        return seq
    D = seq.D
    c = char_eval(chi, x, D.N + 8)
    s = c.inverse_scalar() if hasattr(c, "inverse_scalar") else c.as_scalar().inverse()
    return seq.scale(s)


def borel_decompose(g) -> tuple:
    """[[A, B], [0, D]] = diag(x, x) diag(1, p^j) diag(1, a) [[1, z], [0, 1]]."""
    (A, B), (C, Dd) = g
    A, B, C, Dd = (Fraction(t) for t in (A, B, C, Dd))
    if C != 0 or A == 0 or Dd == 0:
        raise DomainError("not an invertible upper triangular matrix")
    return A, B / A, Dd / A


def borel_act(seq: PsiSequence, g, chi: SmoothCharacter | None = None) -> PsiSequence:
    """g is (x, j, a, z) or a 2x2 upper-triangular matrix with rational entries."""
    p = seq.p
    if isinstance(g, (tuple, list)) and len(g) == 4 and not isinstance(g[0], (tuple, list)):
        x, j, a, z = g
        x = Fraction(x)
    else:
        x, z, ratio = borel_decompose(g)
        j = vp(ratio.numerator, p) - vp(ratio.denominator, p)
        unit = ratio / Fraction(p) ** j
        if unit.denominator % p == 0 or unit.numerator % p == 0:
            raise DomainError("bad unit")
        # a must be an integer unit; use a p-adic representative
        a = unit.numerator * pow(unit.denominator, -1, p ** (seq.D.N + 40)) % p ** (seq.D.N + 40)
    out = act_unipotent(seq, z)
    if a != 1:
        out = act_unit(out, a)
    if j:
        out = act_psi_power(out, j)
    if x != 1:
        out = act_central(out, x, chi)
    return out
