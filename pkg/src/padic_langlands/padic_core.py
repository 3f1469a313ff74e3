"""p-adic scalars and truncated cyclotomic integers.

PadicScalar keeps a fixed relative precision: a nonzero value is p^v * u
with u a unit known modulo p^N.  CyclotomicElement lives in
Z_p[zeta_{p^m}] written in powers of pi = zeta - 1, with an extra p-power
scale so that Haar volumes and Fourier normalisations stay exact.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

INF = math.inf


class PadicError(Exception):
    pass


class DomainError(PadicError, ValueError):
    pass


class PrecisionError(PadicError):
    pass


class ConfigurationError(PadicError):
    pass


def vp(n: int, p: int) -> int:
    """Valuation of a nonzero integer."""
    if n == 0:
        raise DomainError("valuation of 0")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_frac(x: Fraction, p: int) -> int:
    return vp(x.numerator, p) - vp(x.denominator, p)


def split_int(n: int, p: int) -> tuple[int, int]:
    """n = p^v * m with m prime to p."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


def floor_log(n: int, p: int) -> int:
    """Largest k with p^k <= n (n >= 1); 0 for n <= 1."""
    k = 0
    q = p
    while q <= n:
        k += 1
        q *= p
    return k


def ceil_log(n: int, p: int) -> int:
    k = 0
    q = 1
    while q < n:
        k += 1
        q *= p
    return k


class PadicScalar:
    __slots__ = ("p", "N", "v", "u")

    def __init__(self, p: int, N: int, v: int | None, u: int):
        if N < 1:
            raise PrecisionError("relative precision must be positive")
        self.p = p
        self.N = N
        mod = p**N
        u %= mod
        if u == 0 or v is None:
            self.v = None
            self.u = 0
            return
        if u % p == 0:
            raise DomainError("unit part must be prime to p")
        self.v = v
        self.u = u

    # construction
    @classmethod
    def zero(cls, p: int, N: int) -> "PadicScalar":
        return cls(p, N, None, 0)

    @classmethod
    def from_int(cls, n: int, p: int, N: int) -> "PadicScalar":
        if n == 0:
            return cls.zero(p, N)
        v, m = split_int(n, p)
        return cls(p, N, v, m)

    @classmethod
    def from_fraction(cls, x, p: int, N: int) -> "PadicScalar":
        x = Fraction(x)
        if x == 0:
            return cls.zero(p, N)
        vn, a = split_int(x.numerator, p)
        vd, b = split_int(x.denominator, p)
        mod = p**N
        return cls(p, N, vn - vd, a * pow(b, -1, mod))

    def is_zero(self) -> bool:
        return self.v is None

    def valuation(self):
        return INF if self.v is None else self.v

    def abs(self) -> float:
        return 0.0 if self.v is None else float(self.p) ** (-self.v)

    def abs_prec(self):
        """Absolute precision exponent (infinite for the exact zero marker)."""
        return INF if self.v is None else self.v + self.N

    def to_fraction(self) -> Fraction:
        if self.v is None:
            return Fraction(0)
        return Fraction(self.u) * Fraction(self.p) ** self.v

    def residue(self, k: int) -> int:
        """Integer representative modulo p^k; needs v >= 0."""
        if self.v is None:
            return 0
        if self.v < 0:
            raise DomainError("not integral")
        return (self.u * self.p**self.v) % self.p**k

    def with_prec(self, N: int) -> "PadicScalar":
        return PadicScalar(self.p, N, self.v, self.u)

    # arithmetic
    def _coerce(self, other) -> "PadicScalar":
        if isinstance(other, PadicScalar):
            if other.p != self.p:
                raise DomainError("mixed primes")
            return other
        if isinstance(other, (int, Fraction)):
            return PadicScalar.from_fraction(other, self.p, self.N)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        N = min(self.N, o.N)
        if self.v is None:
            return o.with_prec(N)
        if o.v is None:
            return self.with_prec(N)
        p = self.p
        v = min(self.v, o.v)
        s = self.u * p ** (self.v - v) + o.u * p ** (o.v - v)
        if s % p**N == 0:
            return PadicScalar.zero(p, N)
        w, m = split_int(s, p)
        return PadicScalar(p, N, v + w, m)

    __radd__ = __add__

    def __neg__(self):
        if self.v is None:
            return self
        return PadicScalar(self.p, self.N, self.v, -self.u)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        N = min(self.N, o.N)
        if self.v is None or o.v is None:
            return PadicScalar.zero(self.p, N)
        return PadicScalar(self.p, N, self.v + o.v, self.u * o.u)

    __rmul__ = __mul__

    def inverse(self) -> "PadicScalar":
        if self.v is None:
            raise DomainError("division by zero")
        return PadicScalar(self.p, self.N, -self.v, pow(self.u, -1, self.p**self.N))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        if self.v is None:
            return PadicScalar(self.p, self.N, 0, 1) if e == 0 else self
        return PadicScalar(self.p, self.N, self.v * e, pow(self.u, e, self.p**self.N))

    def __eq__(self, other):
        o = self._coerce(other) if not isinstance(other, PadicScalar) else other
        if o is NotImplemented or not isinstance(o, PadicScalar):
            return NotImplemented
        if self.v is None or o.v is None:
            return self.v is None and o.v is None
        if self.v != o.v:
            return False
        N = min(self.N, o.N)
        return (self.u - o.u) % self.p**N == 0

    def __hash__(self):
        return hash((self.p, self.v, self.u % self.p))

    def __repr__(self):
        if self.v is None:
            return f"PadicScalar(p={self.p}, N={self.N}, zero)"
        return f"PadicScalar(p={self.p}, N={self.N}, v={self.v}, u={self.u})"


def padic_make(num: int, den: int, p: int, N: int) -> PadicScalar:
    if den == 0:
        raise DomainError("zero denominator")
    return PadicScalar.from_fraction(Fraction(num, den), p, N)


def teichmuller(a: int, p: int, N: int) -> PadicScalar:
    if a % p == 0:
        raise DomainError("Teichmuller lift of a non-unit")
    if p == 2:
        return PadicScalar(p, N, 0, 1)
    mod = p**N
    x = a % mod
    for _ in range(N):
        x = pow(x, p, mod)
    return PadicScalar(p, N, 0, x)


def teichmuller_int(a: int, p: int, N: int) -> int:
    return teichmuller(a, p, N).u


def binom_mod_list(x: int, jmax: int, p: int, K: int) -> list[int]:
    """C(x, j) mod p^K for j = 0..jmax, x a nonnegative integer.

    Runs the recurrence C(x,j) = C(x,j-1)(x-j+1)/j on unit parts and
    valuations separately, so no big integers appear.
    """
    mod = p**K
    out = [1 % mod]
    unit = 1
    val = 0
    for j in range(1, jmax + 1):
        num = x - j + 1
        if num == 0:
            out.extend([0] * (jmax - j + 1))
            break
        a, num_u = split_int(num, p)
        b, den_u = split_int(j, p)
        val += a - b
        unit = unit * (num_u % mod) * pow(den_u, -1, mod) % mod
        out.append(unit * p**val % mod if val < K else 0)
    return out


def binom_padic(x, n: int, N: int | None = None) -> PadicScalar:
    """Binomial coefficient C(x, n) for a p-adic x.

    For integral x the input must carry floor(log_p n) spare digits; the
    result is then exact to the returned relative precision.
    """
    if n < 0:
        raise DomainError("negative n")
    p = x.p
    N = x.N if N is None else N
    if n == 0:
        return PadicScalar(p, N, 0, 1)
    if x.v is None:
        return PadicScalar.zero(p, N)
    if x.v >= 0:
        A = x.v + x.N
        L = floor_log(n, p)
        k_abs = A - L
        X = x.residue(A)
        c = math.comb(X, n) % p**k_abs if k_abs > 0 else 0
        if c == 0:
            if k_abs < N:
                raise PrecisionError("binom_padic: input precision too low")
            return PadicScalar.zero(p, N)
        w, m = split_int(c, p)
        if k_abs - w < N:
            raise PrecisionError("binom_padic: input precision too low")
        return PadicScalar(p, N, w, m)
    # negative valuation: every factor x - i has valuation v, relative precision survives
    xf = x.to_fraction()
    num = Fraction(1)
    for i in range(n):
        num *= xf - i
    return PadicScalar.from_fraction(num / math.factorial(n), p, min(N, x.N))


# ---------------------------------------------------------------------------
# cyclotomic rings

def ram_index(m: int, p: int) -> int:
    return 1 if m == 0 else p ** (m - 1) * (p - 1)


@lru_cache(maxsize=None)
def q_poly_int(m: int, p: int) -> tuple[int, ...]:
    """Integer coefficients of Q_m (low degree first); Q_0 = X."""
    if m == 0:
        return (0, 1)
    step = p ** (m - 1)
    e = ram_index(m, p)
    out = []
    for j in range(e + 1):
        out.append(sum(math.comb(i * step, j) for i in range(p)))
    return tuple(out)


def _reduce_q(c: list[int], m: int, p: int, mod: int) -> list[int]:
    q = q_poly_int(m, p)
    e = len(q) - 1
    c = list(c)
    for d in range(len(c) - 1, e - 1, -1):
        t = c[d] % mod
        if t:
            base = d - e
            for i in range(e):
                if q[i]:
                    c[base + i] -= t * q[i]
        c[d] = 0
    out = [x % mod for x in c[:e]]
    out.extend([0] * (e - len(out)))
    return out


class CyclotomicElement:
    """p^scale * sum c_i pi^i in Z_p[zeta_{p^m}], known modulo p^prec.

    The coefficient list has length e_m = p^(m-1)(p-1); level 0 stands for
    Z_p itself (pi = 0).
    """

    __slots__ = ("p", "m", "scale", "prec", "coeffs")

    def __init__(self, p: int, N: int, m: int, coeffs: Sequence[int], scale: int = 0):
        e = ram_index(m, p)
        if N < 0:
            N = 0
        self.p = p
        self.m = m
        self.scale = scale
        self.prec = scale + N
        mod = p**N
        cs = list(coeffs)
        if len(cs) > e:
            cs = _reduce_q(cs, m, p, mod) if mod > 1 else [0] * e
        cs = [x % mod for x in cs] + [0] * (e - len(cs))
        self.coeffs = tuple(cs)

    @property
    def N(self) -> int:
        return self.prec - self.scale

    @property
    def e(self) -> int:
        return ram_index(self.m, self.p)

    # constructors
    @classmethod
    def const(cls, x, p: int, N: int, m: int = 0) -> "CyclotomicElement":
        """Embed an int, Fraction or PadicScalar; N is the relative precision."""
        if isinstance(x, PadicScalar):
            if x.v is None:
                return cls(p, N, m, [0], 0)
            return cls(p, min(N, x.N), m, [x.u], x.v)
        x = Fraction(x)
        if x == 0:
            return cls(p, N, m, [0], 0)
        s = PadicScalar.from_fraction(x, p, N)
        return cls(p, N, m, [s.u], s.v)

    @classmethod
    def zeta(cls, p: int, N: int, m: int) -> "CyclotomicElement":
        return cyclo_root_power(1, m, p, N)

    def is_exactly_representable_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    # precision helpers
    def coef_val(self):
        """p-adic valuation floor read from the coefficients (inf if zero)."""
        best = INF
        for c in self.coeffs:
            if c:
                best = min(best, vp(c, self.p))
        return best + self.scale if best != INF else INF

    def rescaled(self, scale: int) -> "CyclotomicElement":
        """Same value written with a smaller scale exponent."""
        if scale > self.scale:
            raise DomainError("can only lower the scale")
        k = self.scale - scale
        out = CyclotomicElement.__new__(CyclotomicElement)
        out.p, out.m, out.scale, out.prec = self.p, self.m, scale, self.prec
        mod = self.p ** (self.prec - scale)
        out.coeffs = tuple((c * self.p**k) % mod for c in self.coeffs)
        return out

    def with_prec(self, prec) -> "CyclotomicElement":
        if prec >= self.prec:
            return self
        out = CyclotomicElement.__new__(CyclotomicElement)
        out.p, out.m, out.scale = self.p, self.m, self.scale
        if prec <= self.scale:
            out.scale = prec
            out.prec = prec
            out.coeffs = tuple(0 for _ in self.coeffs)
            return out
        out.prec = prec
        mod = self.p ** (prec - self.scale)
        out.coeffs = tuple(c % mod for c in self.coeffs)
        return out

    def normalized(self) -> "CyclotomicElement":
        """Pull common factors of p into the scale (keeps the same absolute precision)."""
        if all(c == 0 for c in self.coeffs):
            return self
        k = min(vp(c, self.p) for c in self.coeffs if c)
        if k == 0:
            return self
        out = CyclotomicElement.__new__(CyclotomicElement)
        out.p, out.m, out.prec = self.p, self.m, self.prec
        out.scale = self.scale + k
        out.coeffs = tuple(c // self.p**k for c in self.coeffs)
        return out

    def lift(self, m: int) -> "CyclotomicElement":
        """Embed into level m >= self.m via zeta_{p^m}^{p^(m - self.m)} = zeta_{p^self.m}."""
        if m == self.m:
            return self
        if m < self.m:
            raise DomainError("cannot descend levels")
        p = self.p
        N = self.prec - self.scale
        if self.m == 0:
            return CyclotomicElement(p, N, m, [self.coeffs[0]], self.scale)
        t = cyclo_root_power(p ** (m - self.m), m, p, N) - 1
        tc = t.coeffs
        mod = p**N if N > 0 else 1
        acc = [0] * ram_index(m, p)
        for c in reversed(self.coeffs):
            acc = _mul_raw(acc, tc, m, p, mod)
            acc[0] = (acc[0] + c) % mod
        return CyclotomicElement(p, N, m, acc, self.scale)

    # arithmetic
    def _align(self, other):
        if isinstance(other, (int, Fraction, PadicScalar)):
            other = CyclotomicElement.const(other, self.p, max(self.N, 1) + 8, 0)
        if not isinstance(other, CyclotomicElement):
            return None, None
        m = max(self.m, other.m)
        return self.lift(m), other.lift(m)

    def __add__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        s = min(a.scale, b.scale)
        prec = min(a.prec, b.prec)
        if prec <= s:
            return CyclotomicElement(a.p, 0, a.m, [0], prec)
        mod = a.p ** (prec - s)
        fa = a.p ** (a.scale - s)
        fb = a.p ** (b.scale - s)
        cs = [(x * fa + y * fb) % mod for x, y in zip(a.coeffs, b.coeffs)]
        return CyclotomicElement(a.p, prec - s, a.m, cs, s)

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicElement(self.p, self.N, self.m, [-c for c in self.coeffs], self.scale)

    def __sub__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        p = a.p
        va = a.coef_val()
        vb = b.coef_val()
        cands = []
        if vb != INF:
            cands.append(a.prec + vb)
        if va != INF:
            cands.append(b.prec + va)
        if not cands:
            cands.append(a.prec + b.prec)
        prec = min(cands)
        scale = a.scale + b.scale
        if prec <= scale:
            return CyclotomicElement(p, 0, a.m, [0], prec)
        mod = p ** (prec - scale)
        cs = _mul_raw(a.coeffs, b.coeffs, a.m, p, mod)
        return CyclotomicElement(p, prec - scale, a.m, cs, scale)

    __rmul__ = __mul__

    def scale_by(self, x) -> "CyclotomicElement":
        return self * x

    def __pow__(self, e: int):
        if e < 0:
            raise DomainError("negative power of a cyclotomic element")
        result = CyclotomicElement(self.p, self.N, self.m, [1], 0)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def is_zero(self, prec=None) -> bool:
        """Zero modulo p^prec (default: the element's own precision)."""
        prec = self.prec if prec is None else min(prec, self.prec)
        if prec <= self.scale:
            return True
        mod = self.p ** (prec - self.scale)
        return all(c % mod == 0 for c in self.coeffs)

    def agrees(self, other, prec=None) -> bool:
        d = self - other
        return d.is_zero(prec)

    def __eq__(self, other):
        if not isinstance(other, (CyclotomicElement, int, Fraction, PadicScalar)):
            return NotImplemented
        return self.agrees(other)

    __hash__ = None

    def as_scalar(self) -> PadicScalar:
        """Value as a p-adic number, provided it lies in Q_p."""
        if any(c % self.p ** max(self.N, 0) for c in self.coeffs[1:]) and self.N > 0:
            raise DomainError("element is not in Q_p")
        N = self.N
        if N <= 0:
            return PadicScalar.zero(self.p, 1)
        c = self.coeffs[0]
        if c == 0:
            return PadicScalar.zero(self.p, max(N, 1))
        w, m = split_int(c, self.p)
        return PadicScalar(self.p, max(N - w, 1), self.scale + w, m)

    def __repr__(self):
        return (f"CyclotomicElement(p={self.p}, m={self.m}, scale={self.scale}, "
                f"prec={self.prec}, coeffs={list(self.coeffs)})")


def _mul_raw(a: Sequence[int], b: Sequence[int], m: int, p: int, mod: int) -> list[int]:
    e = ram_index(m, p)
    if m == 0:
        return [(a[0] * b[0]) % mod]
    prod = [0] * (2 * e - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    prod[i + j] += x * y
    return _reduce_q(prod, m, p, mod)


def cyclo_root_power(u: int, m: int, p: int, N: int) -> CyclotomicElement:
    """(1 + pi)^u in the level-m ring; depends only on u mod p^m."""
    if m == 0:
        return CyclotomicElement(p, N, 0, [1])
    u %= p**m
    mod = p**N
    result = [1] + [0] * (ram_index(m, p) - 1)
    base = [1, 1] + [0] * (ram_index(m, p) - 2) if ram_index(m, p) >= 2 else _reduce_q([1, 1], m, p, mod)
    while u:
        if u & 1:
            result = _mul_raw(result, base, m, p, mod)
        u >>= 1
        if u:
            base = _mul_raw(base, base, m, p, mod)
    return CyclotomicElement(p, N, m, result)


def cyclo_pi_val(x: CyclotomicElement):
    """pi-adic valuation, or inf when x vanishes at its precision."""
    e = x.e
    p = x.p
    N = x.prec - x.scale
    if N <= 0:
        return INF
    mod = p**N
    best = INF
    for i, c in enumerate(x.coeffs):
        c %= mod
        if c:
            best = min(best, e * vp(c, p) + i)
    if best == INF:
        return INF
    return best + e * x.scale


def additive_character(q: Fraction, p: int, N: int, m: int | None = None) -> CyclotomicElement:
    """e^{2 i pi q} for q in Z[1/p], realised as a power of zeta_{p^s}."""
    q = Fraction(q)
    s = 0 if q.denominator == 1 else vp(q.denominator, p)
    if q.denominator != p**s:
        raise DomainError("additive character needs a p-power denominator")
    lvl = s if m is None else m
    if lvl < s:
        raise DomainError("level too small for this additive character")
    a = q.numerator % q.denominator if s else 0
    return cyclo_root_power(a * p ** (lvl - s), lvl, p, N)


def units_mod(p: int, n: int) -> list[int]:
    return [x for x in range(p**n) if x % p] if n > 0 else [1]
