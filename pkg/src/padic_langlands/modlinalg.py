"""Linear algebra over Z/p^N: a Smith form with column tracking (for kernels)
and a row-only Howell reduction used as an independent counting oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _valuations(A: np.ndarray, p: int, N: int) -> np.ndarray:
    v = np.zeros(A.shape, dtype=np.int64)
    q = 1
    for _ in range(N):
        q *= p
        v += (A % q == 0)
    return v  # N for entries that vanish mod p^N


@dataclass
class SmithResult:
    p: int
    N: int
    exponents: list  # valuation of each nonzero pivot, in pivot order
    V: np.ndarray  # column transform: A V = U^-1 S
    ncols: int

    @property
    def rank(self) -> int:
        return len(self.exponents)

    def kernel_basis(self) -> list:
        """Generators of {x : A x = 0 mod p^N} as integer vectors."""
        q = self.p**self.N
        out = []
        for i, e in enumerate(self.exponents):
            if e > 0:
                out.append((self.V[:, i] * self.p ** (self.N - e)) % q)
        for i in range(self.rank, self.ncols):
            out.append(self.V[:, i] % q)
        return out

    def kernel_log_size(self) -> int:
        """log_p of the kernel's cardinality."""
        return sum(self.exponents) + self.N * (self.ncols - self.rank)


def smith_mod(A, p: int, N: int) -> SmithResult:
    """Full-pivot diagonalisation mod p^N; pivots chosen by minimal valuation, then lowest index."""
    q = p**N
    if q > 3_000_000_000:
        raise OverflowError("modulus too large for int64 elimination")
    A = np.array(A, dtype=np.int64) % q
    rows, cols = A.shape if A.size else (len(A), 0)
    if A.ndim != 2:
        A = A.reshape(rows, cols)
    V = np.eye(cols, dtype=np.int64)
    exps = []
    t = 0
    while t < min(rows, cols):
        sub = A[t:, t:]
        val = _valuations(sub, p, N)
        vmin = int(val.min()) if val.size else N
        if vmin >= N:
            break
        flat = int(np.flatnonzero(val.ravel() == vmin)[0])
        r, c = divmod(flat, sub.shape[1])
        r += t
        c += t
        if r != t:
            A[[t, r]] = A[[r, t]]
        if c != t:
            A[:, [t, c]] = A[:, [c, t]]
            V[:, [t, c]] = V[:, [c, t]]
        piv = int(A[t, t])
        unit = piv // p**vmin
        inv = pow(unit, -1, q)
        A[t] = (A[t] * inv) % q
        pe = p**vmin
        # clear the column below the pivot
        col = A[t + 1:, t] // pe
        if col.any():
            A[t + 1:] = (A[t + 1:] - np.outer(col, A[t])) % q
        # clear the row to the right, recording column operations
        row = A[t, t + 1:] // pe
        if row.any():
            A[:, t + 1:] = (A[:, t + 1:] - np.outer(A[:, t], row)) % q
            V[:, t + 1:] = (V[:, t + 1:] - np.outer(V[:, t], row)) % q
        exps.append(vmin)
        t += 1
    return SmithResult(p, N, exps, V, cols)


def kernel_mod(A, p: int, N: int) -> list:
    return smith_mod(A, p, N).kernel_basis()


def row_span_log_size(A, p: int, t: int) -> int:
    """log_p |row span of A over Z/p^t|, by Howell-style row reduction in plain integers."""
    q = p**t
    rows = [[int(x) % q for x in r] for r in A]
    rows = [r for r in rows if any(r)]
    ncols = len(A[0]) if len(A) else 0
    total = 0
    for c in range(ncols):
        best = None
        for i, r in enumerate(rows):
            x = r[c]
            if x:
                v = 0
                while x % p == 0:
                    x //= p
                    v += 1
                if best is None or v < best[0]:
                    best = (v, i)
        if best is None:
            continue
        v, i = best
        piv = rows.pop(i)
        unit = piv[c] // p**v
        inv = pow(unit, -1, q)
        piv = [(x * inv) % q for x in piv]
        pe = p**v
        nxt = []
        for r in rows:
            if r[c]:
                f = r[c] // pe
                r = [(x - f * y) % q for x, y in zip(r, piv)]
            if any(r):
                nxt.append(r)
        # the annihilated multiple of the pivot row keeps the later columns
        extra = [(x * p ** (t - v)) % q for x in piv]
        if any(extra):
            nxt.append(extra)
        rows = nxt
        total += t - v
    return total


def kernel_log_size_oracle(A, p: int, t: int) -> int:
    ncols = len(A[0]) if len(A) else 0
    return t * ncols - row_span_log_size(A, p, t)


def matvec_mod(A, x, q: int) -> np.ndarray:
    A = np.asarray(A, dtype=object)
    x = np.asarray(x, dtype=object)
    return (A.dot(x)) % q
