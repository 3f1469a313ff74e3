"""Mahler coefficients, Amice transforms and the norms on tempered distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .padic_core import (
    INF,
    CyclotomicElement,
    DomainError,
    PadicScalar,
    PrecisionError,
    floor_log,
    ram_index,
    split_int,
    vp_frac,
)
from .series_ops import (
    TruncatedSeries,
    divided_derivative,
    from_z_coefficients,
    series_eval_cyclotomic,
    series_psi,
    z_coefficients,
)

AmiceSeries = TruncatedSeries


def scalar_from_exact(x: Fraction, abs_prec, p: int, N: int) -> PadicScalar:
    """A rational known modulo p^abs_prec, as a PadicScalar (relative precision capped at N)."""
    x = Fraction(x)
    if abs_prec == INF:
        return PadicScalar.from_fraction(x, p, N)
    if x == 0:
        return PadicScalar.zero(p, N)
    v = vp_frac(x, p)
    if v >= abs_prec:
        return PadicScalar.zero(p, N)
    return PadicScalar.from_fraction(x, p, min(N, abs_prec - v))


def _exact(x, p: int):
    """(fraction, absolute precision) of an int, Fraction or PadicScalar."""
    if isinstance(x, PadicScalar):
        return x.to_fraction(), x.abs_prec()
    return Fraction(x), INF


@dataclass
class MahlerData:
    p: int
    N: int
    a: list
    tail_val: float = INF

    @property
    def n_max(self) -> int:
        return len(self.a) - 1


def mahler_from_values(values: Sequence, p: int, N: int, tail_val=None) -> MahlerData:
    """Finite differences a_n = sum_i (-1)^i C(n, i) f(n - i)."""
    pairs = [_exact(v, p) for v in values]
    out = []
    for n in range(len(pairs)):
        s = Fraction(0)
        prec = INF
        for i in range(n + 1):
            x, q = pairs[n - i]
            s += (-1) ** i * math.comb(n, i) * x
            prec = min(prec, q)
        out.append(scalar_from_exact(s, prec, p, N))
    if tail_val is None:
        last = out[-1] if out else None
        tail_val = last.valuation() if last is not None else INF
    return MahlerData(p, N, out, tail_val)


def mahler_from_function(f, n_max: int, p: int, N: int, tail_val=None) -> MahlerData:
    return mahler_from_values([f(n) for n in range(n_max + 1)], p, N, tail_val)


def values_from_mahler(md: MahlerData, z) -> PadicScalar:
    """sum_n a_n C(z, n) over the stored window.

    The tail beyond n_max is assumed to have valuation at least md.tail_val,
    which caps the returned precision.
    """
    p = md.p
    if isinstance(z, int) and 0 <= z <= md.n_max:
        # C(z, n) = 0 for n > z: no tail contribution
        total, prec = Fraction(0), INF
        for n in range(z + 1):
            x, q = _exact(md.a[n], p)
            c = math.comb(z, n)
            total += x * c
            prec = min(prec, q + split_int(c, p)[0])
        return scalar_from_exact(total, prec, p, md.N)
    if not isinstance(z, PadicScalar):
        z = PadicScalar.from_fraction(z, p, md.N + floor_log(max(md.n_max, 1), p) + 2)
    if z.v is not None and z.v < 0:
        raise DomainError("Mahler expansion needs z in Z_p")
    A = z.abs_prec()
    if A == INF:
        A = md.N + floor_log(max(md.n_max, 1), p) + 2
    Z = z.residue(A)
    total = Fraction(0)
    prec = md.tail_val
    for n, an in enumerate(md.a):
        x, q = _exact(an, p)
        c = math.comb(Z, n)
        total += x * c
        # C(Z, n) is right modulo p^(A - floor_log n)
        zc = A - floor_log(n, p) if n else INF
        if x != 0:
            prec = min(prec, vp_frac(x, p) + zc)
        if c != 0:
            prec = min(prec, q + split_int(c, p)[0])
        else:
            prec = min(prec, q + zc if zc != INF else q)
    if prec != INF and prec <= -10**6:
        raise PrecisionError("no precision left")
    return scalar_from_exact(total, prec, p, md.N)


def cr_norm(md: MahlerData, r) -> float:
    r = float(Fraction(r))
    lp = math.log(md.p)
    best = None
    for n, an in enumerate(md.a):
        if an.v is not None:
            t = r * math.log(n + 1) - an.v * lp
            best = t if best is None else max(best, t)
    return 0.0 if best is None else math.exp(best)


def sup_norm(md: MahlerData) -> float:
    return cr_norm(md, 0)


# ---------------------------------------------------------------------------
# distributions through their Amice transform


def restrict_precision(prec: Sequence[int], tail: int, M: int, e: int, n: int) -> list[int]:
    out = []
    for l in range(M):
        best = tail + max(0, (M - l) // e - n)
        for i in range(l, M):
            best = min(best, prec[i] + max(0, (i - l) // e - n))
        out.append(best)
    return out


def dist_restrict(w: TruncatedSeries, a: int, n: int) -> TruncatedSeries:
    """Amice transform of 1_{a + p^n Z_p} mu.

    Equal to (1+X)^a phi^n psi^n((1+X)^-a w): in the basis (1+X)^k this keeps
    exactly the k congruent to a mod p^n.
    """
    if n < 0:
        raise DomainError("level must be nonnegative")
    p = w.p
    if n == 0:
        return w
    d, K = z_coefficients(w)
    q = p**n
    a %= q
    kept = [x if k % q == a else 0 for k, x in enumerate(d)]
    prec = restrict_precision(w.prec, w.tail, w.M, ram_index(n, p), n)
    floor = w.val_floor()
    if floor != INF and not w.is_zero() and prec[0] <= min(floor, min(w.prec)) and w.tail < 10**6:
        raise PrecisionError(f"restriction to level {n} exceeds the truncation budget M={w.M}")
    return from_z_coefficients(kept, w, K, prec, w.M, w.tail)


def dist_restrict_oracle(w: TruncatedSeries, a: int, n: int) -> list[CyclotomicElement]:
    """p^-n sum_eta eta^-a w(eta(1+X) - 1), coefficientwise in the level-n ring."""
    from .series_ops import series_eval_at
    from .padic_core import cyclo_root_power

    p = w.p
    K = max(w.prec) - min(w.shift, 0) + n + 4
    out = [CyclotomicElement(p, K, n, [0], -n) for _ in range(w.M)]
    derivs = [divided_derivative(w, l) for l in range(w.M)]
    for b in range(p**n):
        eta = cyclo_root_power(b, n, p, K)
        t = eta - 1
        twist = cyclo_root_power(-a * b, n, p, K)
        power = twist
        for l in range(w.M):
            out[l] = out[l] + series_eval_at(derivs[l], t) * power
            power = power * eta
    scale = Fraction(1, p**n)
    return [x * scale for x in out]


def pairing(md: MahlerData, w: TruncatedSeries) -> PadicScalar:
    """sum_n a_n(f) mu(C(z, n)) on the common window."""
    p = md.p
    L = min(len(md.a), w.M)
    total = Fraction(0)
    prec = INF
    for n in range(L):
        x, q = _exact(md.a[n], p)
        y = w.fraction(n)
        total += x * y
        wv = w.val(n)
        if x != 0:
            prec = min(prec, vp_frac(x, p) + w.prec[n])
        if wv != INF:
            prec = min(prec, q + wv)
        else:
            prec = min(prec, q + w.prec[n] if q != INF else w.prec[n] if x != 0 else INF)
    # Mahler coefficients beyond the window of w (or of md) are not seen
    if len(md.a) > w.M:
        for n in range(w.M, len(md.a)):
            if md.a[n].v is not None:
                prec = min(prec, md.a[n].v + w.tail)
    elif w.M > len(md.a) and md.tail_val != INF:
        prec = min(prec, md.tail_val + w.val_floor())
    return scalar_from_exact(total, prec, p, w.N)


def monomial_mahler(j: int, center, p: int, N: int) -> MahlerData:
    """Mahler coefficients of (z - center)^j; exact, length j + 1."""
    c = Fraction(center)
    return mahler_from_values([(Fraction(z) - c) ** j for z in range(j + 1)], p, N, INF)


def dist_moment(w: TruncatedSeries, j: int, a: int, n: int) -> PadicScalar:
    """int_{a + p^n Z_p} (z - a)^j dmu."""
    res = dist_restrict(w, a, n)
    return pairing(monomial_mahler(j, a, w.p, w.N + 4), res)


def coset_moment(w: TruncatedSeries, j: int, a: int, n: int) -> PadicScalar:
    """Same integral via p^(nj) int y^j d psi^n((1+X)^-a w)(y); shorter windows, used on grids."""
    p = w.p
    g = w * TruncatedSeries.z_power(-a, p, max(w.prec) - min(w.shift, 0) + 2, w.M) if a % p**n else w
    for _ in range(n):
        g = series_psi(g)
    m = pairing(monomial_mahler(j, 0, p, w.N + 4), g)
    return m * PadicScalar(p, max(m.N, 1), n * j, 1) if m.v is not None else m


def twisted_moment(w: TruncatedSeries, j: int, m: int, u: int) -> CyclotomicElement:
    """sum_{i >= j} a_i C(i, j) (eta - 1)^(i - j) with eta = zeta_{p^m}^u."""
    return series_eval_cyclotomic(divided_derivative(w, j), m, u)


def dist_tempered_norm(w: TruncatedSeries, r, d: int, n_grid: int) -> float:
    """sup of p^(n(j - r)) |int_{a + p^n Z_p} (z - a)^j dmu| over the grid; a lower bound."""
    p = w.p
    r = Fraction(r)
    lp = math.log(p)
    best = None
    for n in range(n_grid + 1):
        for a in range(p**n):
            for j in range(d + 1):
                try:
                    mom = coset_moment(w, j, a, n)
                except PrecisionError:
                    continue
                if mom.v is None:
                    continue
                t = float(n * (j - r) - mom.v) * lp
                best = t if best is None else max(best, t)
    return 0.0 if best is None else math.exp(best)


def dist_order_norm(w: TruncatedSeries, r) -> float:
    from .series_ops import series_order_norm

    return series_order_norm(w, r)


# ---------------------------------------------------------------------------
# locally polynomial test functions


@dataclass
class PolyAtom:
    center: int
    level: int
    coeffs: list = field(default_factory=list)  # lambda_i for (z - center)^i


def refine_atom(atom: PolyAtom, level: int, p: int) -> list[PolyAtom]:
    """Rewrite 1_{a + p^n Z_p}(z - a)^i on the finer cosets b + p^level Z_p."""
    if level < atom.level:
        raise DomainError("cannot coarsen an atom")
    out = []
    step = p**atom.level
    for t in range(p ** (level - atom.level)):
        b = atom.center + step * t
        shift = Fraction(b - atom.center)
        new = []
        for l in range(len(atom.coeffs)):
            new.append(sum(Fraction(atom.coeffs[i]) * math.comb(i, l) * shift ** (i - l)
                           for i in range(l, len(atom.coeffs))))
        out.append(PolyAtom(b, level, new))
    return out


def loc_poly_dual_norm(atoms: Sequence[PolyAtom], r, p: int) -> float:
    """sup |lambda_{a,i}| p^(n(r - i)), after refining to a common level."""
    if not atoms:
        return 0.0
    level = max(a.level for a in atoms)
    flat = []
    for a in atoms:
        flat.extend(refine_atom(a, level, p) if a.level < level else [a])
    r = Fraction(r)
    lp = math.log(p)
    best = None
    for a in flat:
        for i, lam in enumerate(a.coeffs):
            lam = Fraction(lam)
            if lam:
                t = float(level * (r - i) - vp_frac(lam, p)) * lp
                best = t if best is None else max(best, t)
    return 0.0 if best is None else math.exp(best)


# ---------------------------------------------------------------------------


@dataclass
class CompactDistributionQp:
    """A distribution on p^-support Z_p, stored through its rescaling to Z_p."""

    support: int
    base: TruncatedSeries

    def rescale_up(self) -> "CompactDistributionQp":
        """Same distribution viewed on p^-(support+1) Z_p: the base gets phi'd."""
        from .series_ops import series_phi

        return CompactDistributionQp(self.support + 1, series_phi(self.base))

    def rescaled_to(self, support: int) -> "CompactDistributionQp":
        out = self
        while out.support < support:
            out = out.rescale_up()
        if out.support > support:
            raise DomainError("cannot shrink the support window this way")
        return out

    def consistent_with(self, finer: "CompactDistributionQp") -> bool:
        """psi-relation between windows: psi(base at support+1) = base at support."""
        if finer.support != self.support + 1:
            raise DomainError("windows must be adjacent")
        return series_psi(finer.base).agrees(self.base)
