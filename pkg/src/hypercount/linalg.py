"""Exact integer linear algebra and Macaulay matrices.

Ranks and nullspaces use fraction-free (Bareiss) elimination over Z, so no
intermediate rational ever appears.  Determinants modulo a prime use plain
Gaussian elimination over F_p; small primes run on numpy int64 arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np
from sympy import isprime

if TYPE_CHECKING:
    from .poly import SparsePoly


@dataclass(frozen=True)
class ExactMatrix:
    """Dense matrix of Python ints.

    ``row_scales[i]`` is the positive integer row ``i`` was multiplied by when
    the matrix was built from rational entries (1 otherwise).
    """

    entries: tuple[tuple[int, ...], ...]
    row_scales: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise ValueError("matrix dimensions must be positive")
        width = len(self.entries[0])
        if any(len(r) != width for r in self.entries):
            raise ValueError("ragged rows")
        if not self.row_scales:
            object.__setattr__(self, "row_scales", (1,) * len(self.entries))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int | Fraction]]) -> "ExactMatrix":
        out, scales = [], []
        for row in rows:
            den = reduce(lambda a, b: a * b // math.gcd(a, b),
                         (Fraction(x).denominator for x in row), 1)
            out.append(tuple(int(Fraction(x) * den) for x in row))
            scales.append(den)
        return cls(tuple(out), tuple(scales))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def __matmul__(self, v: Sequence[int]) -> list[int]:
        return [sum(a * b for a, b in zip(row, v)) for row in self.entries]


@dataclass(frozen=True)
class NullspaceBasis:
    """Primitive integer kernel vectors (content 1, first nonzero entry positive)."""

    vectors: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


def _as_rows(M) -> list[list[int]]:
    if isinstance(M, ExactMatrix):
        return [list(r) for r in M.entries]
    return [list(map(int, r)) for r in M]


def normalize_vector(v: Sequence[int]) -> tuple[int, ...]:
    """Divide by the content and make the first nonzero entry positive."""
    g = reduce(math.gcd, v, 0)
    if g == 0:
        return tuple(v)
    first = next(x for x in v if x)
    if first < 0:
        g = -g
    return tuple(x // g for x in v)


def bareiss_echelon(rows: list[list[int]]) -> tuple[list[list[int]], list[int], int]:
    """Fraction-free row echelon form.

    Returns ``(rows, pivot_columns, sign)``; ``sign`` tracks row swaps.  The
    input list is modified in place.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    prev = 1
    r = 0
    pivots = []
    sign = 1
    for c in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
            sign = -sign
        pr = rows[r]
        pv = pr[c]
        for i in range(r + 1, m):
            row = rows[i]
            a = row[c]
            if a == 0:
                if pv != prev:
                    for j in range(c + 1, n):
                        row[j] = row[j] * pv // prev
                continue
            for j in range(c + 1, n):
                row[j] = (pv * row[j] - a * pr[j]) // prev
            row[c] = 0
        prev = pv
        pivots.append(c)
        r += 1
    return rows, pivots, sign


def det_exact(M) -> int:
    """Exact determinant by Bareiss elimination."""
    rows = _as_rows(M)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant of a non-square matrix")
    rows, pivots, sign = bareiss_echelon(rows)
    if len(pivots) < n:
        return 0
    return sign * rows[n - 1][n - 1]


def rank_and_nullspace(M) -> tuple[int, NullspaceBasis]:
    """Rank over Q and a primitive integer basis of the right kernel."""
    rows = _as_rows(M)
    if not rows or not rows[0]:
        raise ValueError("empty matrix")
    n = len(rows[0])
    ech, pivots, _ = bareiss_echelon(rows)
    rank = len(pivots)
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    basis = []
    for fcol in free:
        x: list[Fraction] = [Fraction(0)] * n
        x[fcol] = Fraction(1)
        for r in range(rank - 1, -1, -1):
            c = pivots[r]
            row = ech[r]
            s = sum((row[j] * x[j] for j in range(c + 1, n) if row[j] and x[j]), Fraction(0))
            x[c] = -s / row[c]
        den = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in x), 1)
        basis.append(normalize_vector([int(v * den) for v in x]))
    return rank, NullspaceBasis(tuple(basis))


def _check_prime(p: int) -> None:
    if not isprime(p):
        raise ValueError(f"{p} is not prime")


def det_mod_p_array(a: np.ndarray, p: int) -> int:
    """Determinant of a square int64 array with entries in ``[0, p)``, ``p < 2**31``."""
    a = a.astype(np.int64, copy=True) % p
    n = a.shape[0]
    det = 1
    for c in range(n):
        nz = np.nonzero(a[c:, c])[0]
        if nz.size == 0:
            return 0
        piv = c + int(nz[0])
        if piv != c:
            a[[c, piv]] = a[[piv, c]]
            det = -det
        pv = int(a[c, c])
        det = det * pv % p
        inv = pow(pv, -1, p)
        below = a[c + 1:, c]
        rows = np.nonzero(below)[0]
        if rows.size:
            rows = rows + c + 1
            factors = (a[rows, c] * inv) % p
            a[np.ix_(rows, np.arange(c, n))] = (a[np.ix_(rows, np.arange(c, n))]
                                                - np.outer(factors, a[c, c:]) % p) % p
    return det % p


def det_mod_p(M, p: int) -> int:
    """Determinant of ``M`` reduced modulo the prime ``p``."""
    _check_prime(p)
    rows = _as_rows(M)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant of a non-square matrix")
    if p < 2 ** 31:
        return det_mod_p_array(np.array([[x % p for x in r] for r in rows], dtype=np.int64), p)
    a = [[x % p for x in r] for r in rows]
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        pv = a[c][c]
        det = det * pv % p
        inv = pow(pv, -1, p)
        for i in range(c + 1, n):
            f = a[i][c] * inv % p
            if f:
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[c])]
    return det % p


# ---------------------------------------------------------------------------
# Macaulay matrices
# ---------------------------------------------------------------------------

def macaulay_degree(nforms: int, e: int) -> int:
    """Critical degree ``(n+1)(e-1)+1`` for ``n+1`` forms of degree ``e``."""
    return nforms * (e - 1) + 1


def macaulay_size(nforms: int, e: int) -> int:
    t = macaulay_degree(nforms, e)
    return math.comb(t + nforms - 1, nforms - 1)


def _macaulay_entries(forms: Sequence["SparsePoly"]) -> tuple[int, Iterator[tuple[int, int, int]]]:
    from .poly import monomials_of_degree

    nf = len(forms)
    if nf == 0:
        raise ValueError("need at least one form")
    nvars = forms[0].nvars
    if any(f.nvars != nvars for f in forms) or nvars != nf:
        raise ValueError(f"need {nvars} forms in {nvars} variables, got {nf}")
    degrees = set()
    for f in forms:
        if not f.is_zero():
            if not f.is_homogeneous():
                raise ValueError("forms must be homogeneous")
            degrees.add(f.total_degree())
    if len(degrees) > 1:
        raise ValueError(f"forms have different degrees {sorted(degrees)}")
    if not degrees:
        raise ValueError("all forms are zero; degree undefined")
    e = degrees.pop()
    if e < 1:
        raise ValueError("forms must have positive degree")
    t = macaulay_degree(nf, e)
    cols = monomials_of_degree(nvars, t)
    index = {m: k for k, m in enumerate(cols)}
    form_terms = [list(f.items()) for f in forms]

    def gen():
        for r, alpha in enumerate(cols):
            i = next(i for i in range(nvars) if alpha[i] >= e)
            mult = list(alpha)
            mult[i] -= e
            for exps, c in form_terms[i]:
                col = index[tuple(a + b for a, b in zip(mult, exps))]
                yield r, col, c

    return len(cols), gen()


def macaulay_matrix(forms: Sequence["SparsePoly"]) -> ExactMatrix:
    """Macaulay matrix of ``n+1`` forms of common degree ``e`` in ``n+1`` variables.

    Columns are the degree-``t`` monomials (``t = (n+1)(e-1)+1``) in
    descending grevlex order.  Row ``k`` is ``(x^alpha / x_i^e) * forms[i]``
    where ``alpha`` is the ``k``-th column monomial and ``i`` is the smallest
    index with ``alpha_i >= e``.
    """
    size, entries = _macaulay_entries(forms)
    rows = [[0] * size for _ in range(size)]
    for r, c, v in entries:
        rows[r][c] += v
    return ExactMatrix(tuple(tuple(r) for r in rows))


def macaulay_det_mod_p(forms: Sequence["SparsePoly"], p: int) -> int:
    """``det(macaulay_matrix(forms)) mod p`` without building Python-int rows."""
    _check_prime(p)
    size, entries = _macaulay_entries(forms)
    if p >= 2 ** 31:
        rows = [[0] * size for _ in range(size)]
        for r, c, v in entries:
            rows[r][c] += v
        return det_mod_p(rows, p)
    a = np.zeros((size, size), dtype=np.int64)
    for r, c, v in entries:
        a[r, c] = (a[r, c] + v) % p
    return det_mod_p_array(a, p)
