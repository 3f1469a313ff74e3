"""Truncated power series over Q_p with the operators phi, psi and Gamma.

A series is stored in fixed point: coefficient i equals p^shift * c[i] and
is known modulo p^prec[i].  Omitted coefficients (index >= M) are assumed
to have valuation at least ``tail``; psi is the only operator whose low
coefficients depend on that tail, and its output precision accounts for it.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .padic_core import (
    INF,
    CyclotomicElement,
    DomainError,
    PadicScalar,
    PrecisionError,
    _mul_raw,
    ceil_log,
    cyclo_root_power,
    ram_index,
    split_int,
    binom_mod_list,
)


def _red(c: list[int], prec: list[int], shift: int, p: int) -> list[int]:
    out = []
    for x, q in zip(c, prec):
        k = q - shift
        out.append(x % p**k if k > 0 and x else 0)
    return out


class TruncatedSeries:
    __slots__ = ("p", "N", "M", "shift", "c", "prec", "tail")

    def __init__(self, p: int, N: int, c: Sequence[int], prec: Sequence[int] | None = None,
                 shift: int = 0, tail: int | None = None):
        self.p = p
        self.N = N
        self.M = len(c)
        self.shift = shift
        self.prec = list(prec) if prec is not None else [N + shift if shift < 0 else N] * len(c)
        if len(self.prec) != self.M:
            raise DomainError("precision list length mismatch")
        self.c = _red(list(c), self.prec, shift, p)
        if tail is None:
            tail = self.val_floor()
            if tail == INF:
                tail = min(self.prec) if self.prec else N
        self.tail = int(tail)

    # ---- constructors
    @classmethod
    def from_ints(cls, ints: Sequence[int], p: int, N: int, M: int | None = None) -> "TruncatedSeries":
        ints = list(ints)
        M = len(ints) if M is None else M
        ints = (ints + [0] * M)[:M]
        return cls(p, N, ints, [N] * M, 0)

    @classmethod
    def from_fractions(cls, xs: Sequence, p: int, N: int, M: int | None = None,
                       tail: int | None = None) -> "TruncatedSeries":
        xs = [Fraction(x) for x in xs]
        M = len(xs) if M is None else M
        xs = (xs + [Fraction(0)] * M)[:M]
        scal = [PadicScalar.from_fraction(x, p, N) for x in xs]
        return cls.from_scalars(scal, p, N, tail=tail)

    @classmethod
    def from_scalars(cls, xs: Sequence[PadicScalar], p: int, N: int,
                     tail: int | None = None) -> "TruncatedSeries":
        vals = [x.v for x in xs if x.v is not None]
        shift = min(0, min(vals)) if vals else 0
        c, prec = [], []
        for x in xs:
            if x.v is None:
                c.append(0)
                prec.append(N + shift)
            else:
                c.append(x.u * p ** (x.v - shift))
                prec.append(x.v + x.N)
        return cls(p, N, c, prec, shift, tail)

    @classmethod
    def zero(cls, p: int, N: int, M: int) -> "TruncatedSeries":
        return cls.from_ints([0] * M, p, N, M)

    @classmethod
    def one(cls, p: int, N: int, M: int) -> "TruncatedSeries":
        return cls.from_ints([1], p, N, M)

    @classmethod
    def variable(cls, p: int, N: int, M: int) -> "TruncatedSeries":
        return cls.from_ints([0, 1], p, N, M)

    @classmethod
    def z_power(cls, a, p: int, N: int, M: int) -> "TruncatedSeries":
        """(1+X)^a for an integer or p-adic integer a."""
        K = N + ceil_log(max(M, 2), p) + 1
        if isinstance(a, PadicScalar):
            if a.v is not None and a.v < 0:
                raise DomainError("exponent must be a p-adic integer")
            A = a.residue(K)
        elif isinstance(a, int) and a >= 0:
            A = a
        else:
            A = int(a) % p**K
        return cls.from_ints(binom_mod_list(A, M - 1, p, N), p, N, M)

    # ---- views
    def coeff(self, i: int) -> PadicScalar:
        p = self.p
        x = self.c[i]
        if x == 0:
            return PadicScalar.zero(p, max(self.N, 1))
        w, u = split_int(x, p)
        v = self.shift + w
        return PadicScalar(p, max(self.prec[i] - v, 1), v, u)

    def coeffs(self) -> list[PadicScalar]:
        return [self.coeff(i) for i in range(self.M)]

    def fraction(self, i: int) -> Fraction:
        return Fraction(self.c[i]) * Fraction(self.p) ** self.shift

    def val(self, i: int):
        x = self.c[i]
        if x == 0:
            return INF
        return self.shift + split_int(x, self.p)[0]

    def val_floor(self):
        """Lowest valuation among stored coefficients, counting unknown digits."""
        best = INF
        for i in range(self.M):
            v = self.val(i)
            best = min(best, v if v != INF else self.prec[i])
        return best

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.c)

    def __repr__(self):
        return (f"TruncatedSeries(p={self.p}, N={self.N}, M={self.M}, shift={self.shift}, "
                f"c={self.c[:8]}{'...' if self.M > 8 else ''})")

    # ---- structural helpers
    def _with(self, c, prec, shift, tail, M=None) -> "TruncatedSeries":
        out = TruncatedSeries.__new__(TruncatedSeries)
        out.p, out.N = self.p, self.N
        out.M = len(c) if M is None else M
        out.shift = shift
        out.prec = list(prec)
        out.c = _red(list(c), out.prec, shift, self.p)
        out.tail = int(tail)
        return out

    def rescaled(self, shift: int) -> tuple[list[int], int]:
        if shift > self.shift:
            raise DomainError("can only lower the shift")
        f = self.p ** (self.shift - shift)
        return [x * f for x in self.c], shift

    def truncate(self, M: int) -> "TruncatedSeries":
        M = min(M, self.M)
        return self._with(self.c[:M], self.prec[:M], self.shift, min(self.tail, self.val_floor()))

    def with_precision(self, prec) -> "TruncatedSeries":
        if isinstance(prec, int):
            prec = [prec] * self.M
        return self._with(self.c, [min(a, b) for a, b in zip(self.prec, prec)], self.shift, self.tail)

    # ---- ring operations
    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            if other.p != self.p:
                raise DomainError("mixed primes")
            return other
        if isinstance(other, (int, Fraction, PadicScalar)):
            s = other if isinstance(other, PadicScalar) else PadicScalar.from_fraction(other, self.p,
                                                                                      max(self.prec) + 8)
            if s.v is None:
                return self._with([0] * self.M, self.prec, self.shift, self.tail)
            shift = min(s.v, self.shift)
            # zero coefficients of a constant are exact: reuse our own precision
            prec = [s.v + s.N] + self.prec[1:]
            return self._with([s.u * self.p ** (s.v - shift)] + [0] * (self.M - 1), prec, shift, self.tail)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        M = min(self.M, o.M)
        s = min(self.shift, o.shift)
        a, _ = self.rescaled(s)
        b, _ = o.rescaled(s)
        prec = [min(x, y) for x, y in zip(self.prec[:M], o.prec[:M])]
        return self._with([x + y for x, y in zip(a[:M], b[:M])], prec, s, min(self.tail, o.tail))

    __radd__ = __add__

    def __neg__(self):
        return self._with([-x for x in self.c], self.prec, self.shift, self.tail)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "TruncatedSeries":
        """Multiply by a scalar; ints and Fractions are exact."""
        p = self.p
        if not isinstance(s, PadicScalar):
            s = Fraction(s)
            if s == 0:
                return self._with([0] * self.M, self.prec, self.shift, self.tail)
            vn, a = split_int(s.numerator, p)
            vd, b = split_int(s.denominator, p)
            v = vn - vd
            big = max(self.prec) - self.shift + 2
            u = a * pow(b, -1, p**big)
            return self._with([x * u for x in self.c], [q + v for q in self.prec], self.shift + v,
                              self.tail + v)
        if s.v is None:
            return self._with([0] * self.M, self.prec, self.shift, self.tail)
        v = s.v
        prec = []
        for i in range(self.M):
            vi = self.val(i)
            cap = self.prec[i] + v
            if vi != INF:
                cap = min(cap, vi + v + s.N)
            prec.append(cap)
        return self._with([x * s.u for x in self.c], prec, self.shift + v, self.tail + v)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, PadicScalar)):
            return self.scale(other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        M = min(self.M, o.M)
        p = self.p
        va = self.val_floor()
        vb = o.val_floor()
        pa = _prefix_min(self.prec[:M])
        pb = _prefix_min(o.prec[:M])
        prec = []
        for k in range(M):
            cand = []
            if vb != INF:
                cand.append(pa[k] + vb)
            if va != INF:
                cand.append(pb[k] + va)
            if not cand:
                cand.append(pa[k] + pb[k])
            prec.append(min(cand))
        shift = self.shift + o.shift
        K = max(prec) - shift
        mod = p**K if K > 0 else 1
        c = _kron_mul([x % mod for x in self.c[:M]], [x % mod for x in o.c[:M]], M)
        ta = min(self.tail + (vb if vb != INF else o.tail), o.tail + (va if va != INF else self.tail))
        return self._with(c, prec, shift, ta)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise DomainError("negative power")
        out = TruncatedSeries.one(self.p, self.N, self.M)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    # ---- comparison
    def discrepancy(self, other: "TruncatedSeries") -> list[tuple[int, int, int]]:
        """Indices where the two series differ at joint precision.

        Returns (index, valuation of the difference, joint precision).
        """
        M = min(self.M, other.M)
        s = min(self.shift, other.shift)
        a, _ = self.rescaled(s)
        b, _ = other.rescaled(s)
        bad = []
        for i in range(M):
            q = min(self.prec[i], other.prec[i])
            k = q - s
            if k <= 0:
                continue
            d = (a[i] - b[i]) % self.p**k
            if d:
                bad.append((i, s + split_int(d, self.p)[0], q))
        return bad

    def agrees(self, other: "TruncatedSeries") -> bool:
        return not self.discrepancy(other)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.agrees(other)

    __hash__ = None


def _prefix_min(xs: Sequence[int]) -> list[int]:
    out = []
    cur = INF
    for x in xs:
        cur = min(cur, x)
        out.append(cur)
    return out


def _kron_mul(a: list[int], b: list[int], M: int) -> list[int]:
    """Product of two nonnegative coefficient lists, truncated to length M."""
    if not any(a) or not any(b):
        return [0] * M
    bits = max(x.bit_length() for x in a) + max(x.bit_length() for x in b) + M.bit_length() + 1
    A = _pack(a, bits)
    B = _pack(b, bits)
    C = A * B
    mask = (1 << bits) - 1
    out = []
    for _ in range(M):
        out.append(C & mask)
        C >>= bits
    return out


def _pack(xs: list[int], bits: int) -> int:
    acc = 0
    for x in reversed(xs):
        acc = (acc << bits) | x
    return acc


# ---------------------------------------------------------------------------
# basis change matrices (reduced modulo p^K, cached)

@lru_cache(maxsize=64)
def _to_z(M: int, p: int, K: int) -> tuple[tuple[int, ...], ...]:
    """Row n: coefficients (-1)^(j-n) C(j, n) for j < M, so that d = T c."""
    mod = p**K
    rows = []
    for n in range(M):
        rows.append(tuple(((-1) ** (j - n) * math.comb(j, n)) % mod if j >= n else 0 for j in range(M)))
    return tuple(rows)


@lru_cache(maxsize=64)
def _from_z(M: int, p: int, K: int) -> tuple[tuple[int, ...], ...]:
    """Row j: C(n, j) for n < M."""
    mod = p**K
    return tuple(tuple(math.comb(n, j) % mod for n in range(M)) for j in range(M))


@lru_cache(maxsize=64)
def _phi_mat(M: int, p: int, K: int) -> tuple[tuple[int, ...], ...]:
    """Row j: C(p n, j) for n < M."""
    mod = p**K
    return tuple(tuple(math.comb(p * n, j) % mod for n in range(M)) for j in range(M))


@lru_cache(maxsize=256)
def _gamma_shift(M: int, p: int, K: int, A: int) -> tuple[int, ...]:
    """(1+X)^A - 1 mod (p^K, X^M)."""
    y = binom_mod_list(A, M - 1, p, K)
    return (0,) + tuple(y[1:])


def _matvec(rows, vec, mod) -> list[int]:
    return [sum(map(int.__mul__, r, vec)) % mod for r in rows]


def _working_modulus(f: TruncatedSeries) -> int:
    return max(max(f.prec) - f.shift, 1)


def z_coefficients(f: TruncatedSeries) -> tuple[list[int], int]:
    """Coefficients in the basis (1+X)^n, as integers modulo p^K (K returned)."""
    K = _working_modulus(f)
    mod = f.p**K
    return _matvec(_to_z(f.M, f.p, K), [x % mod for x in f.c], mod), K


def from_z_coefficients(d: Sequence[int], template: TruncatedSeries, K: int, prec, M: int,
                        tail: int) -> TruncatedSeries:
    mod = template.p**K
    d = (list(d) + [0] * M)[:M]
    c = _matvec(_from_z(M, template.p, K), d, mod)
    return template._with(c, prec, template.shift, tail)


def series_phi(f: TruncatedSeries) -> TruncatedSeries:
    d, K = z_coefficients(f)
    mod = f.p**K
    c = _matvec(_phi_mat(f.M, f.p, K), d, mod)
    return f._with(c, _prefix_min(f.prec), f.shift, f.tail)


def psi_precision(prec: Sequence[int], tail: int, M: int, p: int) -> list[int]:
    """Absolute precision of psi(f) coefficient j, from the X-adic position of each error."""
    Mo = -(-M // p)
    out = []
    for j in range(Mo):
        best = tail + max(0, M // p - j)
        for i, q in enumerate(prec):
            best = min(best, q + max(0, i // p - j))
        out.append(best)
    return out


def series_psi(f: TruncatedSeries) -> TruncatedSeries:
    p = f.p
    d, K = z_coefficients(f)
    kept = d[::p]
    Mo = len(kept)
    prec = psi_precision(f.prec, f.tail, f.M, p)
    mod = p**K
    c = _matvec(_from_z(Mo, p, K), kept, mod)
    return f._with(c, prec, f.shift, f.tail)


def gamma_exponent(a, p: int, N: int, M: int) -> int:
    """Positive integer representative of the unit a, with the digits gamma needs."""
    need = N + ceil_log(max(M, 2), p)
    if isinstance(a, PadicScalar):
        if a.v != 0:
            raise DomainError("gamma needs a unit")
        if a.N < need:
            raise PrecisionError(f"gamma exponent known to p^{a.N}, needs p^{need}")
        return a.residue(a.N)
    a = int(a)
    if a % p == 0:
        raise DomainError("gamma needs a unit")
    return a % p ** (need + 1)


def series_gamma(f: TruncatedSeries, a) -> TruncatedSeries:
    p = f.p
    K = _working_modulus(f)
    A = gamma_exponent(a, p, K, f.M)
    mod = p**K
    M = f.M
    y = _gamma_shift(M, p, K, A)
    if mod * mod * M < 2**62:
        # small modulus: powers of Y = (1+X)^A - 1 as int64 convolutions
        Y = np.array(y, dtype=np.int64)
        rows = np.zeros((M, M), dtype=np.int64)
        rows[0, 0] = 1
        for i in range(1, M):
            rows[i] = np.convolve(rows[i - 1], Y)[:M] % mod
        x = np.array([t % mod for t in f.c], dtype=np.int64)
        c = [int(t) for t in (x @ rows) % mod]
    else:
        # Horner in Y; Y has no constant term so truncation is harmless
        y = list(y)
        c = [0] * M
        for x in reversed(f.c):
            c = [t % mod for t in _kron_mul(c, y, M)]
            c[0] = (c[0] + x) % mod
    return f._with(c, _prefix_min(f.prec), f.shift, f.tail)


def q_polynomial(n: int, p: int, N: int, M: int) -> TruncatedSeries:
    from .padic_core import q_poly_int

    if n < 1:
        raise DomainError("Q_n needs n >= 1")
    return TruncatedSeries.from_ints(list(q_poly_int(n, p)), p, N, M)


def series_log1p(p: int, N: int, M: int) -> TruncatedSeries:
    xs = [Fraction(0)] + [Fraction((-1) ** (i - 1), i) for i in range(1, M)]
    tail = -ceil_log(4 * M, p)
    return TruncatedSeries.from_fractions(xs, p, N, M, tail=tail)


def _exponent_max(items) -> Fraction | None:
    best = None
    for x in items:
        if best is None or x > best:
            best = x
    return best


def series_disk_norm(f: TruncatedSeries, s) -> float:
    """sup |a_i| p^(-s i) over stored coefficients, i.e. the norm on the disk of radius p^-s."""
    s = Fraction(s)
    e = _exponent_max(Fraction(-f.val(i)) - s * i for i in range(f.M) if f.c[i])
    return 0.0 if e is None else float(f.p) ** float(e)


def series_order_norm(f: TruncatedSeries, r) -> float:
    """sup (n+1)^(-r) |a_n| over stored coefficients."""
    r = float(Fraction(r))
    lp = math.log(f.p)
    best = None
    for n in range(f.M):
        if f.c[n]:
            t = -r * math.log(n + 1) - f.val(n) * lp
            best = t if best is None else max(best, t)
    return 0.0 if best is None else math.exp(best)


def divided_derivative(f: TruncatedSeries, j: int) -> TruncatedSeries:
    """sum_i C(i, j) a_i X^(i-j): the j-th Taylor coefficient series."""
    if j == 0:
        return f
    if j >= f.M:
        raise PrecisionError("derivative order exceeds truncation")
    c = [math.comb(i, j) * f.c[i] for i in range(j, f.M)]
    return f._with(c, f.prec[j:], f.shift, f.tail)


def eval_precision(f: TruncatedSeries, e: int) -> int:
    best = f.tail + f.M // e
    for i, q in enumerate(f.prec):
        best = min(best, q + i // e)
    return best


def series_eval_at(f: TruncatedSeries, t: CyclotomicElement) -> CyclotomicElement:
    """f(t) for t of positive pi-adic valuation in a level-m ring."""
    p = f.p
    m = t.m
    e = ram_index(m, p)
    P = min(eval_precision(f, e), t.prec + f.val_floor() if f.val_floor() != INF else t.prec)
    K = P - f.shift
    if K <= 0:
        return CyclotomicElement(p, 0, m, [0], P)
    mod = p**K
    tc = [x % mod for x in t.rescaled(0).coeffs] if t.scale > 0 else list(t.coeffs)
    acc = [0] * e
    for x in reversed(f.c):
        acc = _mul_raw(acc, tc, m, p, mod)
        acc[0] = (acc[0] + x) % mod
    return CyclotomicElement(p, K, m, acc, f.shift)


def series_eval_cyclotomic(f: TruncatedSeries, m: int, u: int) -> CyclotomicElement:
    """f(zeta^u - 1) in the level-m ring; zeta = zeta_{p^m}."""
    p = f.p
    if m > 0 and u % p == 0:
        raise DomainError("u must be prime to p")
    K = max(max(f.prec) - min(f.shift, 0), 1) + 2
    t = cyclo_root_power(u, m, p, K) - 1
    return series_eval_at(f, t)


def series_compose_scalar_shift(f: TruncatedSeries, eta: CyclotomicElement) -> list[CyclotomicElement]:
    """Coefficients of f(eta (1+X) - 1) as a series in X over the level of eta."""
    t = eta - 1
    out = []
    power = CyclotomicElement(f.p, max(f.prec) - f.shift + 4, eta.m, [1])
    for i in range(f.M):
        g = divided_derivative(f, i)
        out.append(series_eval_at(g, t) * power)
        power = power * eta
    return out
