"""Locally polynomial functions on Q_p, the GL2 action on them, finite Fourier
analysis and the smooth intertwiner between the two principal series."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .galois_side import FilteredModule, char_eval
from .mahler_analysis import CompactDistributionQp, dist_moment
from .padic_core import (
    INF,
    CyclotomicElement,
    DomainError,
    PadicScalar,
    additive_character,
    units_mod,
    vp_frac,
)

EXTRA_PREC = 30


def val(x: Fraction, p: int):
    x = Fraction(x)
    return INF if x == 0 else vp_frac(x, p)


def canonical_center(r, n: int, p: int) -> Fraction:
    """Representative of r + p^n Z_p in [0, p^n) with a p-power denominator."""
    r = Fraction(r)
    v = val(r, p)
    if v >= n:
        return Fraction(0)
    s = max(0, -v)
    A = r * p**s
    mod = p ** (n + s)
    return Fraction(A.numerator * pow(A.denominator, -1, mod) % mod, p**s)


def in_coset(z, n: int, c, p: int) -> bool:
    return val(Fraction(z) - c, p) >= n


def _const(x, p: int, prec: int) -> CyclotomicElement:
    return CyclotomicElement.const(Fraction(x), p, prec)


def _zero(p: int, prec: int) -> CyclotomicElement:
    return CyclotomicElement(p, prec, 0, [0])


def _is_zero(c: CyclotomicElement) -> bool:
    return c.is_zero()


# ---------------------------------------------------------------------------
# polynomial atoms: coefficient lists in powers of (z - center)


def recenter(poly: list, old, new, p: int) -> list:
    """Coefficients of the same polynomial in powers of (z - new)."""
    delta = Fraction(old) - Fraction(new)
    if delta == 0:
        return list(poly)
    # P(z - old) with z - old = (z - new) - delta
    d = -delta
    out = []
    for l in range(len(poly)):
        acc = None
        for i in range(l, len(poly)):
            term = poly[i] * (Fraction(math.comb(i, l)) * d ** (i - l))
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def scale_poly(poly: list, lam) -> list:
    lam = Fraction(lam)
    return [c * lam**i for i, c in enumerate(poly)]


def add_poly(a: list, b: list) -> list:
    return [x + y for x, y in zip(a, b)]


def poly_is_zero(poly: list) -> bool:
    return all(_is_zero(c) for c in poly)


def poly_equal(a: list, b: list) -> bool:
    return all((x - y).is_zero() for x, y in zip(a, b))


def children(n: int, c, poly: list, p: int):
    step = Fraction(p) ** n
    for t in range(p):
        cc = canonical_center(c + t * step, n + 1, p)
        yield n + 1, cc, recenter(poly, c, cc, p)


def contains(big: tuple, small: tuple, p: int) -> bool:
    (n1, c1), (n2, c2) = big, small
    return n1 <= n2 and val(c2 - c1, p) >= n1


def partition(atoms: Iterable, p: int) -> dict:
    """Disjoint atom dictionary; overlapping cosets are split and summed."""
    out: dict = {}
    stack = list(atoms)
    while stack:
        n, c, poly = stack.pop()
        key = (n, c)
        if key in out:
            out[key] = add_poly(out[key], poly)
            continue
        parent = next((k for k in out if k[0] < n and contains(k, key, p)), None)
        if parent is not None:
            ppoly = out.pop(parent)
            stack.append((n, c, poly))
            stack.extend(children(parent[0], parent[1], ppoly, p))
            continue
        inner = any(k[0] > n and contains(key, k, p) for k in out)
        if inner:
            stack.extend(children(n, c, poly, p))
            continue
        out[key] = poly
    return out


def merge_atoms(atoms: dict, p: int) -> dict:
    atoms = {k: v for k, v in atoms.items() if not poly_is_zero(v)}
    changed = True
    while changed:
        changed = False
        groups: dict = {}
        for (n, c), poly in atoms.items():
            parent = (n - 1, canonical_center(c, n - 1, p))
            groups.setdefault(parent, []).append(((n, c), poly))
        for parent, items in sorted(groups.items(), key=lambda t: -t[0][0]):
            if len(items) != p:
                continue
            polys = [recenter(poly, c, parent[1], p) for (n, c), poly in items]
            if all(poly_equal(polys[0], q) for q in polys[1:]):
                for k, _ in items:
                    atoms.pop(k)
                atoms[parent] = polys[0]
                changed = True
                break
    return atoms


def refine_to(n: int, c, poly: list, level: int, p: int) -> list:
    out = [(n, c, poly)]
    while out[0][0] < level:
        nxt = []
        for a in out:
            nxt.extend(children(*a, p))
        out = nxt
    return out


# ---------------------------------------------------------------------------


class LocPolyFunction:
    """Compactly supported atoms plus an optional tail on |z| > p^T.

    On side 'alpha' the function lies in pi(alpha): the tail is
    (beta/alpha)(z) |z|^-1 sum_j d_j z^(k-2-j).  Side 'beta' swaps the roles.
    """

    def __init__(self, D: FilteredModule, side: str = "alpha", atoms=None, tail=None, prec: int | None = None,
                 canonical: bool = True):
        if side not in ("alpha", "beta"):
            raise DomainError("side must be 'alpha' or 'beta'")
        self.D = D
        self.side = side
        self.p = D.p
        self.k = D.k
        self.prec = D.N + EXTRA_PREC if prec is None else prec
        first, second = (D.alpha, D.beta) if side == "alpha" else (D.beta, D.alpha)
        self.first = first
        self.twist = second * first.inverse()
        self.m = max(self.twist.conductor, 1)
        raw = []
        for a in atoms or []:
            n, c, poly = a
            poly = [x if isinstance(x, CyclotomicElement) else _const(x, self.p, self.prec) for x in poly]
            poly = (poly + [_zero(self.p, self.prec)] * (self.k - 1))[: self.k - 1]
            raw.append((n, canonical_center(c, n, self.p), recenter(poly, c, canonical_center(c, n, self.p), self.p)))
        self.atoms = partition(raw, self.p)
        if tail is not None:
            T, d = tail
            d = [x if isinstance(x, CyclotomicElement) else _const(x, self.p, self.prec) for x in d]
            d = (d + [_zero(self.p, self.prec)] * (self.k - 1))[: self.k - 1]
            self.tail = (T, d)
        else:
            self.tail = None
        if canonical:
            self.canonicalize()

    # ---- helpers
    def chi(self, x) -> CyclotomicElement:
        return char_eval(self.twist, x, self.prec)

    def zero_poly(self) -> list:
        return [_zero(self.p, self.prec) for _ in range(self.k - 1)]

    def has_tail(self) -> bool:
        return self.tail is not None and not poly_is_zero(self.tail[1])

    def tail_shell_atoms(self, s: int, d: list | None = None) -> list:
        """The tail restricted to {val z = s}, as atoms of level s + m."""
        p, k = self.p, self.k
        d = self.tail[1] if d is None else d
        out = []
        for u in units_mod(p, self.m):
            c = Fraction(p) ** s * u
            factor = self.chi(c) * Fraction(p) ** s  # |c|^-1 = p^s
            mono = [_zero(p, self.prec) for _ in range(k - 1)]
            for j, dj in enumerate(d):
                e = k - 2 - j
                mono[e] = mono[e] + dj
            poly = recenter(mono, 0, c, p)
            out.append((s + self.m, canonical_center(c, s + self.m, p), [x * factor for x in poly]))
        return out

    def _copy(self, atoms: dict, tail) -> "LocPolyFunction":
        out = LocPolyFunction.__new__(LocPolyFunction)
        out.D, out.side, out.p, out.k, out.prec = self.D, self.side, self.p, self.k, self.prec
        out.first, out.twist, out.m = self.first, self.twist, self.m
        out.atoms = atoms
        out.tail = tail
        return out

    # ---- canonical form
    def canonicalize(self) -> "LocPolyFunction":
        p = self.p
        atoms = merge_atoms(partition([(n, c, q) for (n, c), q in self.atoms.items()], p), p)
        if not self.has_tail():
            self.tail = None
            self.atoms = atoms
            return self
        T, d = self.tail

        def outside(key, T):
            n, c = key
            return n < -T or (c != 0 and val(c, p) < -T)

        need = [max(-n, -val(c, p) if c != 0 else -n) for (n, c) in atoms if outside((n, c), T)]
        if need:
            T_new = max(need)
            extra = []
            for s in range(-T_new, -T):
                extra.extend(self.tail_shell_atoms(s, d))
            atoms = partition([(n, c, q) for (n, c), q in atoms.items()] + extra, p)
            T = T_new
        while True:
            s = -T
            shell = [(n, c, [-x for x in q]) for n, c, q in self.tail_shell_atoms(s, d)]
            cand = merge_atoms(partition([(n, c, q) for (n, c), q in atoms.items()] + shell, p), p)
            hit = any(n <= s or (c != 0 and val(c, p) == s) for (n, c) in cand)
            if hit:
                break
            atoms = cand
            T -= 1
        self.atoms = merge_atoms(atoms, p)
        self.tail = (T, d)
        return self

    # ---- evaluation and comparison
    def evaluate(self, z) -> CyclotomicElement:
        p = self.p
        if isinstance(z, PadicScalar):
            z = z.to_fraction()
        z = Fraction(z)
        for (n, c), poly in self.atoms.items():
            if in_coset(z, n, c, p):
                t = z - c
                acc = _zero(p, self.prec)
                for i, x in enumerate(poly):
                    acc = acc + x * t**i
                return acc
        if self.tail is not None and z != 0 and val(z, p) < -self.tail[0]:
            T, d = self.tail
            acc = _zero(p, self.prec)
            for j, dj in enumerate(d):
                acc = acc + dj * z ** (self.k - 2 - j)
            return acc * self.chi(z) * Fraction(p) ** val(z, p)
        return _zero(p, self.prec)

    def equals(self, other: "LocPolyFunction") -> bool:
        if set(self.atoms) != set(other.atoms):
            return False
        for k, v in self.atoms.items():
            if not poly_equal(v, other.atoms[k]):
                return False
        if self.has_tail() != other.has_tail():
            return False
        if self.has_tail():
            if self.tail[0] != other.tail[0] or not poly_equal(self.tail[1], other.tail[1]):
                return False
        return True

    def is_zero(self) -> bool:
        return not self.atoms and not self.has_tail()

    def scaled(self, s) -> "LocPolyFunction":
        atoms = {k: [x * s for x in q] for k, q in self.atoms.items()}
        tail = (self.tail[0], [x * s for x in self.tail[1]]) if self.tail else None
        return self._copy(atoms, tail).canonicalize()

    def __add__(self, other: "LocPolyFunction") -> "LocPolyFunction":
        p = self.p
        atoms = [(n, c, q) for (n, c), q in self.atoms.items()] + [(n, c, q) for (n, c), q in other.atoms.items()]
        ta, tb = self.tail if self.has_tail() else None, other.tail if other.has_tail() else None
        if ta and tb:
            T = max(ta[0], tb[0])
            for src in (self, other):
                for s in range(-T, -src.tail[0]):
                    atoms.extend(src.tail_shell_atoms(s))
            tail = (T, add_poly(ta[1], tb[1]))
        else:
            tail = ta or tb
        return self._copy(partition(atoms, p), tail).canonicalize()

    def __neg__(self):
        return self.scaled(-1)

    def __sub__(self, other):
        return self + (-other)

    def support_exponent(self) -> int:
        """Smallest S with every atom inside p^-S Z_p."""
        S = 0
        for n, c in self.atoms:
            S = max(S, -n, -val(c, self.p) if c != 0 else -n)
        return S

    def __repr__(self):
        return f"LocPolyFunction(side={self.side}, atoms={len(self.atoms)}, tail={'yes' if self.has_tail() else 'no'})"


# ---------------------------------------------------------------------------
# the GL2 action


def _first_char(f: LocPolyFunction, x) -> CyclotomicElement:
    return char_eval(f.first, x, f.prec)


def act_diagonal(f: LocPolyFunction, a1, d1) -> LocPolyFunction:
    """diag(a1, d1): f -> first(a1 d1) chi(a1) |a1|^-1 a1^(k-2) f(d1 z / a1)."""
    p, k = f.p, f.k
    a1, d1 = Fraction(a1), Fraction(d1)
    lam = d1 / a1
    vl = val(lam, p)
    kappa = _first_char(f, a1 * d1) * f.chi(a1) * (Fraction(p) ** val(a1, p) * a1 ** (k - 2))
    atoms = []
    for (n, c), poly in f.atoms.items():
        nc = c / lam
        atoms.append((n - vl, nc, [x * kappa for x in scale_poly(poly, lam)]))
    tail = None
    if f.has_tail():
        T, d = f.tail
        cl = f.chi(lam) * Fraction(p) ** vl
        tail = (T + vl, [dj * cl * lam ** (k - 2 - j) * kappa for j, dj in enumerate(d)])
    return _build(f, atoms, tail)


def _build(f: LocPolyFunction, atoms: list, tail) -> LocPolyFunction:
    p = f.p
    clean = []
    for n, c, poly in atoms:
        cc = canonical_center(c, n, p)
        clean.append((n, cc, recenter(poly, c, cc, p)))
    return f._copy(partition(clean, p), tail).canonicalize()


def act_unipotent(f: LocPolyFunction, b) -> LocPolyFunction:
    """[[1, b], [0, 1]]: f -> f(z - b)."""
    p, k = f.p, f.k
    b = Fraction(b)
    if b == 0:
        return f
    atoms = [(n, c + b, poly) for (n, c), poly in f.atoms.items()]
    tail = None
    if f.has_tail():
        T, d = f.tail
        T_new = max(T, f.m - val(b, p))
        for s in range(-T_new, -T):
            for n, c, poly in f.tail_shell_atoms(s):
                atoms.append((n, c + b, poly))
        nd = []
        for i in range(k - 1):
            acc = _zero(p, f.prec)
            for j in range(i + 1):
                acc = acc + d[j] * (Fraction(math.comb(k - 2 - j, k - 2 - i)) * (-b) ** (i - j))
            nd.append(acc)
        tail = (T_new, nd)
    return _build(f, atoms, tail)


def weyl_sign(f: LocPolyFunction) -> CyclotomicElement:
    return _first_char(f, -1) * f.chi(-1) * (-1) ** (f.k - 2)


def act_weyl(f: LocPolyFunction) -> LocPolyFunction:
    """[[0, 1], [1, 0]]: f -> eps chi(z) |z|^-1 z^(k-2) f(1/z)."""
    p, k = f.p, f.k
    eps = weyl_sign(f)
    atoms = []
    tail = None
    if f.has_tail():
        T, d = f.tail
        atoms.append((T + 1, Fraction(0), [x * eps for x in d]))
    zero_atom = next(((n, c) for (n, c) in f.atoms if c == 0), None)
    if zero_atom is not None:
        n0 = zero_atom[0]
        tail = (n0 - 1, [x * eps for x in f.atoms[zero_atom]])
    for (n, c), poly in f.atoms.items():
        if c == 0:
            continue
        v = val(c, p)
        for n2, r, q in refine_to(n, c, poly, max(n, v + f.m), p):
            # sum_i q_i z^(k-2-i) (1 - r z)^i, in powers of z
            mono = [_zero(p, f.prec) for _ in range(k - 1)]
            for i, qi in enumerate(q):
                for l in range(i + 1):
                    coef = Fraction(math.comb(i, l)) * (-r) ** l
                    e = k - 2 - i + l
                    mono[e] = mono[e] + qi * coef
            center = 1 / r
            factor = eps * f.chi(center) * Fraction(p) ** (-v)
            atoms.append((n2 - 2 * v, center, [x * factor for x in recenter(mono, 0, center, p)]))
    return _build(f, atoms, tail)


def gl2_act(g, f: LocPolyFunction) -> LocPolyFunction:
    """Left action of an invertible rational 2x2 matrix, via the Bruhat decomposition."""
    (a, b), (c, d) = g
    a, b, c, d = (Fraction(x) for x in (a, b, c, d))
    det = a * d - b * c
    if det == 0:
        raise DomainError("singular matrix")
    if c == 0:
        return act_diagonal(act_unipotent(f, b / a), a, d)
    # g = U(a/c) w diag(c, -det/c) U(d/c)
    out = act_unipotent(f, d / c)
    out = act_diagonal(out, c, -det / c)
    out = act_weyl(out)
    return act_unipotent(out, a / c)


def central_scalar(f: LocPolyFunction, x) -> CyclotomicElement:
    """(first * second)(x) |x|^-1 x^(k-2): how diag(x, x) acts."""
    x = Fraction(x)
    second = f.twist * f.first
    return (char_eval(f.first, x, f.prec) * char_eval(second, x, f.prec)
            * (Fraction(f.p) ** val(x, f.p) * x ** (f.k - 2)))


def mat_mul(g1, g2):
    return tuple(tuple(sum(Fraction(g1[i][t]) * Fraction(g2[t][j]) for t in range(2)) for j in range(2))
                 for i in range(2))


# ---------------------------------------------------------------------------
# locally constant functions and Fourier transforms


class LocConstFunction:
    """Finite sum of values times indicators of disjoint cosets of Q_p."""

    def __init__(self, p: int, atoms=None, prec: int = 40):
        self.p = p
        self.prec = prec
        raw = []
        for n, c, v in atoms or []:
            v = v if isinstance(v, CyclotomicElement) else _const(v, p, prec)
            raw.append((n, canonical_center(c, n, p), [v]))
        self.atoms = merge_atoms(partition(raw, p), p)

    def items(self):
        return [(n, c, q[0]) for (n, c), q in sorted(self.atoms.items())]

    def evaluate(self, x) -> CyclotomicElement:
        x = Fraction(x)
        for (n, c), q in self.atoms.items():
            if in_coset(x, n, c, self.p):
                return q[0]
        return _zero(self.p, self.prec)

    def total_mass(self) -> CyclotomicElement:
        acc = _zero(self.p, self.prec)
        for (n, c), q in self.atoms.items():
            acc = acc + q[0] * Fraction(self.p) ** (-n)
        return acc

    def equals(self, other: "LocConstFunction") -> bool:
        if set(self.atoms) != set(other.atoms):
            return False
        return all(poly_equal(self.atoms[k], other.atoms[k]) for k in self.atoms)

    def support_exponent(self) -> int:
        S = 0
        for n, c in self.atoms:
            S = max(S, -n, -val(c, self.p) if c != 0 else -n)
        return S

    def finest_level(self) -> int:
        return max((n for n, _ in self.atoms), default=0)

    def zero_radius(self) -> int:
        """Smallest n with the function vanishing on p^n Z_p (needs value 0 near 0)."""
        n0 = -10**9
        for n, c in self.atoms:
            if c == 0:
                raise DomainError("function does not vanish near 0")
            n0 = max(n0, val(c, self.p) + 1)
        return n0 if self.atoms else 0

    def __repr__(self):
        return f"LocConstFunction({len(self.atoms)} atoms)"


def _char_level(atoms, S: int, p: int) -> int:
    lv = 0
    for n, c in atoms:
        if c != 0:
            lv = max(lv, -val(c, p) + S)
    return max(lv, 0)


def fourier_qp(h: LocConstFunction) -> LocConstFunction:
    """x -> int h(z) e^(-2 i pi z x) dz, Haar measure with vol(Z_p) = 1."""
    p = h.p
    if not h.atoms:
        return LocConstFunction(p, [], h.prec)
    S = max(n for n, _ in h.atoms)  # support of the transform: p^-S Z_p
    L = max([-n for n, _ in h.atoms] + [-val(c, p) for n, c in h.atoms if c != 0])
    lv = _char_level(h.atoms, S, p)
    out = []
    count = p ** (L + S)
    for t in range(count):
        x0 = Fraction(t, p**S) if S >= 0 else Fraction(t * p ** (-S))
        acc = CyclotomicElement(p, h.prec, lv, [0])
        for (n, c), q in h.atoms.items():
            if val(x0, p) >= -n:
                chi = additive_character(-c * x0 - math.floor(-c * x0), p, h.prec, lv)
                acc = acc + q[0].lift(max(lv, q[0].m)) * chi * Fraction(p) ** (-n)
        out.append((L, x0, acc))
    return LocConstFunction(p, out, h.prec)


def reflect(h: LocConstFunction) -> LocConstFunction:
    return LocConstFunction(h.p, [(n, -c, q[0]) for (n, c), q in h.atoms.items()], h.prec)


# ---------------------------------------------------------------------------
# intertwiner


def module_fractions(D: FilteredModule) -> tuple:
    return D.exact_values()


def intertwine_constant(D: FilteredModule) -> Fraction:
    if not D.distinct:
        raise DomainError("intertwining constant needs alpha != beta")
    ap, bp = module_fractions(D)
    p = D.p
    if D.twist.is_unramified():
        c = (1 - bp / (p * ap)) / (1 - ap / bp)
    else:
        c = (bp / (p * ap)) ** D.m_V
    if c == 0:
        raise DomainError("vanishing intertwining constant")
    return c


def unit_character_sum(D: FilteredModule, y, prec: int) -> CyclotomicElement:
    """sum over x in (Z/p^m_V)^x of (beta/alpha)(x) e^(2 i pi x y / p^(val y + m_V)).

    An unramified twist gives -1, or 1 under the module's "gauss" prefactor rule.
    """
    p = D.p
    if D.prefactor_rule == "gauss" and D.twist.is_unramified():
        return CyclotomicElement(p, prec, 0, [1])
    y = Fraction(y)
    mV = D.m_V
    u = y / Fraction(p) ** val(y, p)
    lvl = max(mV, D.twist.level)
    acc = CyclotomicElement(p, prec, lvl, [0])
    for x in units_mod(p, mV):
        q = x * u / p**mV
        acc = acc + D.twist.unit_value(x, prec).lift(lvl) * additive_character(q - math.floor(q), p, prec, lvl)
    return acc


def twist_gauss_factor(D: FilteredModule, y, prec: int) -> CyclotomicElement:
    """H(y): 1 when beta/alpha is unramified, else the unit character sum."""
    if D.twist.is_unramified():
        return CyclotomicElement(D.p, prec, 0, [1])
    return unit_character_sum(D, y, prec)


def twist_integral_oracle(D: FilteredModule, y, N: int, prec: int = 40) -> CyclotomicElement:
    """int_{p^-N Z_p} chi(x) |x|^-1 e^(2 i pi x y) dx by shells, with the geometric part summed in closed form."""
    p = D.p
    y = Fraction(y)
    vy = val(y, p)
    ap, bp = module_fractions(D)
    r = ap / bp  # chi(p)
    chi = D.twist
    mV = max(chi.conductor, 1)
    lvl = max(-vy - (-N), chi.level, 0) if vy != INF else chi.level
    lvl = max(lvl, mV)
    acc = CyclotomicElement(p, prec, lvl, [0])
    L0 = -vy if vy != INF else -N
    unit_mass = Fraction(p - 1, p) if chi.is_unramified() else Fraction(0)
    for l in range(-N, L0):
        K = max(-vy - l, mV)
        part = CyclotomicElement(p, prec, lvl, [0])
        for u in units_mod(p, K):
            q = Fraction(p) ** l * u * y
            part = part + chi.unit_value(u, prec).lift(lvl) * additive_character(q - math.floor(q), p, prec, lvl)
        acc = acc + part * (r**l * Fraction(1, p**K))
    start = max(L0, -N)
    if unit_mass:
        acc = acc + _const(unit_mass * r**start / (1 - r), p, prec)
    return acc


def intertwine_constant_oracle(D: FilteredModule, y, N: int | None = None, prec: int = 40) -> CyclotomicElement:
    p = D.p
    y = Fraction(y)
    vy = val(y, p)
    N = vy + D.m_V if N is None else N
    if N < vy + D.m_V:
        raise DomainError("needs N >= val(y) + m_V")
    ap, bp = module_fractions(D)
    I = twist_integral_oracle(D, y, N, prec)
    H = twist_gauss_factor(D, y, prec)
    target = H * (bp / ap) ** vy
    return I, target


def lisse_oracle(D: FilteredModule, h: LocConstFunction, z, prec: int = 40) -> CyclotomicElement:
    """I(h)(z) = int chi(x) |x|^-1 h(z + x) dx by shells, chi = beta/alpha."""
    p = D.p
    z = Fraction(z)
    chi = D.twist
    mV = max(chi.conductor, 1)
    ap, bp = module_fractions(D)
    r = ap / bp
    Lh = h.finest_level()
    N1 = h.support_exponent()
    vz = val(z, p)
    lmin = min(vz, -N1) if vz != INF else -N1
    lvl = max(chi.level, max((q[0].m for q in h.atoms.values()), default=0))
    acc = CyclotomicElement(p, prec, lvl, [0])
    for l in range(lmin, Lh):
        K = max(Lh - l, mV)
        part = CyclotomicElement(p, prec, lvl, [0])
        for u in units_mod(p, K):
            v = h.evaluate(z + Fraction(p) ** l * u)
            if not v.is_zero():
                part = part + chi.unit_value(u, prec).lift(lvl) * v
        acc = acc + part * (r**l * Fraction(1, p**K))
    if chi.is_unramified():
        hz = h.evaluate(z)
        start = max(Lh, lmin)
        acc = acc + hz * (Fraction(p - 1, p) * r**start / (1 - r))
    return acc


def fourier_lisse(D: FilteredModule, h: LocConstFunction, prec: int = 40) -> LocConstFunction:
    """I(h) for compactly supported h with hat h(0) = 0, by the Fourier formula."""
    p = D.p
    if not h.atoms:
        return LocConstFunction(p, [], prec)
    hh = fourier_qp(h)
    if not hh.atoms:
        return LocConstFunction(p, [], prec)
    N0 = hh.zero_radius()
    N1 = h.support_exponent()
    mV = D.m_V
    N = max(N0, N1 + mV)
    C = intertwine_constant(D)
    ap, bp = module_fractions(D)
    # refine hat h so that val(y) and H(y) are constant on each coset
    ycos = []
    for (n, c), q in hh.atoms.items():
        vmin = val(c, p) if c != 0 else n
        for n2, c2, q2 in refine_to(n, c, q, max(n, vmin + mV), p):
            vy = val(c2, p)
            if vy >= N:
                continue
            ycos.append((n2, c2, q2[0]))
    if not ycos:
        return LocConstFunction(p, [], prec)
    Lz = max(max(-val(c, p) for _, c, _ in ycos), -N)
    lv = max(max(0, -val(c, p) + N) for _, c, _ in ycos)
    lv = max(lv, D.twist.level, mV)
    weights = []
    for n2, c2, v in ycos:
        vy = val(c2, p)
        w = v.lift(max(v.m, lv)) * twist_gauss_factor(D, c2, prec).lift(lv) * (C * (bp / ap) ** vy * Fraction(p) ** (-n2))
        weights.append((n2, c2, w))
    out = []
    for t in range(p ** (N + Lz)):
        z0 = Fraction(t, p**N)
        acc = CyclotomicElement(p, prec, lv, [0])
        for n2, c2, w in weights:
            if val(z0, p) >= -n2:
                q = z0 * c2
                acc = acc + w * additive_character(q - math.floor(q), p, prec, lv)
        out.append((Lz, z0, acc))
    return LocConstFunction(p, out, prec)


def smooth_parts(f: LocPolyFunction) -> list:
    """h_j with f = sum_j z^j h_j, each h_j locally constant."""
    p, k = f.p, f.k
    if f.has_tail():
        raise DomainError("smooth parts need compact support")
    parts = [[] for _ in range(k - 1)]
    for (n, c), poly in f.atoms.items():
        mono = recenter(poly, c, 0, p)
        for j, x in enumerate(mono):
            parts[j].append((n, c, x))
    return [LocConstFunction(p, a, f.prec) for a in parts]


def _times_power(h: LocConstFunction, j: int, k: int, prec: int) -> list:
    out = []
    for (n, c), q in h.atoms.items():
        poly = [_zero(h.p, prec) for _ in range(k - 1)]
        poly[j] = q[0]
        out.append((n, c, recenter(poly, 0, c, h.p)))
    return out


def lisse_of_ball(D: FilteredModule, Nb: int, prec: int) -> tuple:
    """I(1_{p^-Nb Z_p}): constant inside, an annulus of cosets, and chi(-z)|z|^-1 p^Nb far out."""
    p = D.p
    chi = D.twist
    mV = D.m_V
    ap, bp = module_fractions(D)
    r = ap / bp
    inner = Fraction(0)
    if chi.is_unramified():
        inner = Fraction(p - 1, p) * r ** (-Nb) / (1 - r)
    ball = LocConstFunction(p, [(-Nb, 0, 1)], prec)
    annulus = []
    for s in range(-Nb - mV + 1, -Nb):
        for u in units_mod(p, s + Nb):
            z0 = Fraction(p) ** s * u
            annulus.append((-Nb, z0, lisse_oracle(D, ball, z0, prec)))
    return inner, annulus


def smooth_intertwine(f: LocPolyFunction) -> LocPolyFunction:
    """I: pi(beta) -> pi(alpha) on a compactly supported f."""
    D = f.D
    p, k = f.p, f.k
    if f.side != "beta":
        raise DomainError("the intertwiner takes functions on the beta side")
    prec = f.prec
    hs = smooth_parts(f)
    Nb = max([h.support_exponent() for h in hs] + [0])
    out_atoms = []
    tail_d = [_zero(p, prec) for _ in range(k - 1)]
    any_tail = False
    minus_one = char_eval(D.twist, -1, prec)
    for j, h in enumerate(hs):
        if not h.atoms:
            continue
        mass = h.total_mass()
        hprime = h
        if not mass.is_zero():
            any_tail = True
            ball = LocConstFunction(p, [(-Nb, 0, mass * Fraction(p) ** (-Nb))], prec)
            neg = LocConstFunction(p, [(n, c, -q[0]) for (n, c), q in ball.atoms.items()], prec)
            hprime = LocConstFunction(p, h.items() + neg.items(), prec)
            inner, annulus = lisse_of_ball(D, Nb, prec)
            scale = mass * Fraction(p) ** (-Nb)
            ball_part = [(-Nb, Fraction(0), scale * inner)] + [(n, c, scale * v) for n, c, v in annulus]
            out_atoms.extend(_times_power(LocConstFunction(p, ball_part, prec), j, k, prec))
            tail_d[k - 2 - j] = tail_d[k - 2 - j] + mass * minus_one
        g = fourier_lisse(D, hprime, prec)
        out_atoms.extend(_times_power(g, j, k, prec))
    tail = (Nb + D.m_V - 1, tail_d) if any_tail else None
    target = LocPolyFunction(D, "alpha", [], None, prec)
    return target._copy(partition(out_atoms, p), tail).canonicalize()


# ---------------------------------------------------------------------------
# integration against compactly supported distributions


def integrate(f: LocPolyFunction, mu: CompactDistributionQp) -> CyclotomicElement:
    """int f dmu for a compactly supported f, through the rescaled base on Z_p."""
    p = f.p
    if f.has_tail():
        raise DomainError("integration needs compact support")
    S = max(f.support_exponent(), mu.support)
    base = mu.rescaled_to(S)
    acc = _zero(p, f.prec)
    for (n, c), poly in f.atoms.items():
        a = c * p**S
        if a.denominator != 1:
            raise DomainError("atom outside the support window")
        for i, x in enumerate(poly):
            if x.is_zero():
                continue
            mom = dist_moment(base.base, i, int(a), n + S)
            acc = acc + x * CyclotomicElement.const(mom, p, max(mom.N, 1)) * Fraction(p) ** (-S * i)
    return acc


def _plain_exp_function(D: FilteredModule, side: str, j: int, y, N: int, scale, prec: int) -> LocPolyFunction:
    """scale * 1_{p^-N Z_p}(z) z^j e^(2 i pi z y), as atoms."""
    p = D.p
    y = Fraction(y)
    L = max(-val(y, p), -N)
    lv = max(0, -val(y, p) + N)
    atoms = []
    for t in range(p ** (N + L)):
        z0 = Fraction(t, p**N)
        q = z0 * y
        e = additive_character(q - math.floor(q), p, prec, lv) * scale
        poly = [_zero(p, prec) for _ in range(D.k - 1)]
        poly[j] = e
        atoms.append((L, z0, recenter(poly, 0, z0, p)))
    return LocPolyFunction(D, side, atoms, None, prec)


@dataclass
class CrucialReport:
    agree: bool
    rows: list = field(default_factory=list)  # (j, y, N, i_holds, ii_holds)


def crucial_equiv_check(D: FilteredModule, mu_alpha: CompactDistributionQp, mu_beta: CompactDistributionQp,
                        trials: Sequence[tuple]) -> CrucialReport:
    """Compare the moment identity (i) with the intertwiner identity (ii) on matched test functions.

    (i) is weighted by H(y), the factor the Fourier route of the intertwiner produces, so that
    each (ii) instance is the (i) instance scaled by p^-N.
    """
    p = D.p
    C = intertwine_constant(D)
    ap, bp = module_fractions(D)
    prec = D.N + EXTRA_PREC
    rep = CrucialReport(True)
    for j, y, N in trials:
        y = Fraction(y)
        vy = val(y, p)
        if N < vy + D.m_V:
            raise DomainError("trial needs N >= val(y) + m_V")
        f_plain = _plain_exp_function(D, "alpha", j, y, N, Fraction(1), prec)
        lhs_i = integrate(LocPolyFunction(D, "beta", [(n, c, q) for (n, c), q in f_plain.atoms.items()], None, prec),
                          mu_beta)
        rhs_i = twist_gauss_factor(D, y, prec) * (bp / ap) ** vy * integrate(f_plain, mu_alpha)
        i_holds = (lhs_i - rhs_i).is_zero()
        h = _plain_exp_function(D, "beta", j, y, N, Fraction(1, p**N), prec)
        If = smooth_intertwine(h)
        lhs_ii = integrate(If, mu_alpha)
        rhs_ii = integrate(h, mu_beta) * C
        ii_holds = (lhs_ii - rhs_ii).is_zero()
        rep.rows.append((j, y, N, i_holds, ii_holds))
        if i_holds != ii_holds:
            rep.agree = False
    return rep


# ---------------------------------------------------------------------------
# dual lattice conditions


@dataclass
class LatticeReport:
    ok: bool
    violations: list = field(default_factory=list)  # (kind, a, n, j, valuation, bound)
    checked: int = 0


def split_components(f: LocPolyFunction) -> tuple:
    """(f_1, f_2) on Z_p: f_1(z) = f(pz), f_2(z) = chi(z)|z|^-1 z^(k-2) f(1/z)."""
    p = f.p
    f1 = act_diagonal(f, 1, p).scaled(char_eval(f.first, p, f.prec).as_scalar().inverse())
    eps = weyl_sign(f)
    f2 = act_weyl(f).scaled(eps.as_scalar().inverse())
    return restrict_to_zp(f1), restrict_to_zp(f2)


def restrict_to_zp(f: LocPolyFunction) -> list:
    """Atoms of f inside Z_p (the tail contributes shells down to val 0)."""
    p = f.p
    atoms = []
    for (n, c), poly in f.atoms.items():
        if n >= 0 and (c == 0 or val(c, p) >= 0):
            atoms.append((n, c, poly))
        elif n < 0 and c == 0 or (n < 0 and val(c, p) >= n):
            atoms.extend(a for a in refine_to(n, c, poly, 0, p) if a[1].denominator == 1)
    if f.has_tail() and f.tail[0] < 0:
        for s in range(0, -f.tail[0]):
            atoms.extend(f.tail_shell_atoms(s))
    return atoms


def pair_atoms(atoms: list, w, p: int, prec: int) -> CyclotomicElement:
    acc = _zero(p, prec)
    for n, c, poly in atoms:
        for i, x in enumerate(poly):
            if x.is_zero():
                continue
            mom = dist_moment(w, i, int(c), n)
            acc = acc + x * CyclotomicElement.const(mom, p, max(mom.N, 1))
    return acc


def coset_test_function(D: FilteredModule, kind: str, a, n: int, j: int, prec: int) -> LocPolyFunction:
    """chaud1: 1_{a+p^n}(z)(z-a)^j.  chaud2: 1_{outside a+p^n} chi(z-a)|z-a|^-1 (z-a)^(k-2-j)."""
    p, k = D.p, D.k
    a = Fraction(a)
    if kind == "chaud1":
        poly = [_zero(p, prec) for _ in range(k - 1)]
        poly[j] = _const(1, p, prec)
        return LocPolyFunction(D, "alpha", [(n, a, poly)], None, prec)
    d = [_zero(p, prec) for _ in range(k - 1)]
    d[j] = _const(1, p, prec)
    # tail at 0 on |z| > p^-n, then shifted by a
    base = LocPolyFunction(D, "alpha", [], (-n, d), prec, canonical=False)
    return act_unipotent(base, -a)


def lattice_pairing_check(D: FilteredModule, mu1, mu2, C: float, grid: dict) -> LatticeReport:
    """Grid instances of the two integrality conditions, through the (f_1, f_2) splitting.

    grid: {'levels': iterable of n, 'centers': callable n -> iterable of a, 'kinds': ('chaud1', ...)}.
    """
    p = D.p
    prec = D.N + EXTRA_PREC
    va = D.val_alpha
    rep = LatticeReport(True)
    logC = math.log(C, p) if C > 0 else -INF
    for kind in grid.get("kinds", ("chaud1", "chaud2")):
        for n in grid["levels"]:
            for a in grid["centers"](n):
                for j in range(D.k - 1):
                    f = coset_test_function(D, kind, a, n, j, prec)
                    f1, f2 = split_components(f)
                    value = pair_atoms(f1, mu1, p, prec) + pair_atoms(f2, mu2, p, prec)
                    rep.checked += 1
                    bound = n * (j - va) if kind == "chaud1" else n * (va - j)
                    v = _cyc_val(value)
                    if v != INF and v < bound - logC - 1e-9:
                        rep.ok = False
                        rep.violations.append((kind, a, n, j, v, bound))
    return rep


def _cyc_val(x: CyclotomicElement) -> float:
    """p-adic valuation (rational, as a float) of a cyclotomic element, inf if zero at precision."""
    from .padic_core import cyclo_pi_val

    pv = cyclo_pi_val(x)
    if pv == INF:
        return INF
    return pv / x.e
