"""Table-driven arithmetic in F_{p^k} for batch polynomial evaluation.

Elements are encoded as integers ``0 .. p^k - 1`` whose base-``p`` digits are
the coefficients in the polynomial basis ``1, t, ..., t^{k-1}``.  Code 0 is
zero and code 1 is one.  Multiplication goes through log/antilog tables built
from a primitive modulus, so any field with ``p^k`` up to a few hundred
thousand elements is cheap to set up.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .poly import SparsePoly


class GF:
    def __init__(self, p: int, k: int = 1):
        if k < 1:
            raise ValueError("extension degree must be >= 1")
        self.p = p
        self.k = k
        self.q = p ** k
        self.modulus, self.exp = _primitive_tables(p, k)
        q = self.q
        log = np.zeros(q, dtype=np.int64)
        log[self.exp[: q - 1]] = np.arange(q - 1)
        self.log = log
        self._weights = p ** np.arange(k, dtype=np.int64)

    def __repr__(self):
        return f"GF({self.p}^{self.k})"

    # vectorized operations on code arrays
    def add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.k == 1:
            return (a + b) % self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for w in self._weights:
            out += ((a // w % self.p + b // w % self.p) % self.p) * w
        return out

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.k == 1:
            return a * b % self.p
        zero = (a == 0) | (b == 0)
        r = self.exp[(self.log[a] + self.log[b]) % (self.q - 1)]
        return np.where(zero, 0, r)

    def power(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        if self.k == 1:
            return _powmod_array(a, e, self.p)
        r = self.exp[(self.log[a] * e) % (self.q - 1)]
        return np.where(a == 0, 0, r)

    def from_int(self, c: int) -> int:
        """Image of an integer in the prime subfield."""
        return c % self.p

    def evaluate(self, poly: SparsePoly, points: np.ndarray) -> np.ndarray:
        """Evaluate an integer polynomial at rows of ``points`` (codes)."""
        points = np.asarray(points, dtype=np.int64)
        out = np.zeros(points.shape[0], dtype=np.int64)
        cache: dict[tuple[int, int], np.ndarray] = {}
        for exps, c in poly.items():
            c = self.from_int(c)
            if c == 0:
                continue
            term = np.full(points.shape[0], c, dtype=np.int64)
            for i, e in enumerate(exps):
                if e:
                    key = (i, e)
                    if key not in cache:
                        cache[key] = self.power(points[:, i], e)
                    term = self.mul(term, cache[key])
            out = self.add(out, term)
        return out

    def evaluate_point(self, poly: SparsePoly, point) -> int:
        return int(self.evaluate(poly, np.array([point], dtype=np.int64))[0])


def _powmod_array(a: np.ndarray, e: int, p: int) -> np.ndarray:
    result = np.ones_like(a)
    base = a % p
    while e:
        if e & 1:
            result = result * base % p
        e >>= 1
        if e:
            base = base * base % p
    return result


@lru_cache(maxsize=64)
def _primitive_tables(p: int, k: int) -> tuple[tuple[int, ...], np.ndarray]:
    """Find a primitive monic modulus of degree ``k`` and its antilog table."""
    q = p ** k
    if k == 1:
        for g in range(1, p):
            seen = [1]
            x = g % p
            while x != 1:
                seen.append(x)
                x = x * g % p
            if len(seen) == p - 1:
                return (g,), np.array(seen + [1], dtype=np.int64)
        raise AssertionError("no primitive root")  # unreachable for prime p
    for tail in product(range(p), repeat=k):
        if tail[0] == 0:
            continue
        # modulus t^k + tail[k-1] t^{k-1} + ... + tail[0]
        exp = _orbit_of_t(p, k, tail)
        if exp is not None:
            return tail, exp
    raise AssertionError(f"no primitive polynomial of degree {k} over F_{p}")


def _orbit_of_t(p: int, k: int, tail) -> np.ndarray | None:
    q = p ** k
    coeffs = [0] * k
    coeffs[0] = 1
    codes = []
    seen = set()
    for _ in range(q - 1):
        code = sum(c * p ** i for i, c in enumerate(coeffs))
        if code in seen:
            return None
        seen.add(code)
        codes.append(code)
        # multiply by t and reduce
        top = coeffs[-1]
        coeffs = [0] + coeffs[:-1]
        if top:
            coeffs = [(c - top * m) % p for c, m in zip(coeffs, tail)]
    if sum(c * p ** i for i, c in enumerate(coeffs)) != 1:
        return None
    return np.array(codes + [1], dtype=np.int64)


def projective_point_count(q: int, m: int) -> int:
    """Number of points of P^{m-1}(F_q)."""
    return (q ** m - 1) // (q - 1)


def projective_points(q: int, m: int, chunk: int = 1 << 18):
    """Yield arrays of normalized projective points (first nonzero code = 1)."""
    for lead in range(m):
        free = m - lead - 1
        total = q ** free
        for start in range(0, total, chunk):
            idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
            pts = np.zeros((idx.size, m), dtype=np.int64)
            pts[:, lead] = 1
            rest = idx
            for j in range(m - 1, lead, -1):
                pts[:, j] = rest % q
                rest = rest // q
            yield pts
