"""Exact sparse multivariate polynomials over the integers.

Variables are ``x0 .. x(nvars-1)``.  Projective forms in P^n use all of
``x0..xn``; affine polynomials in A^n use ``x1..xn`` and leave ``x0`` free
for homogenization.

All coefficients are Python ints; nothing in this module uses fixed-width
arithmetic.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import reduce
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

MAX_VARS = 16

Monomial = tuple  # tuple[int, ...] of length nvars


class PolySyntaxError(ValueError):
    """Raised by :func:`parse_poly`; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def grevlex_key(exps: Sequence[int]):
    """Sort key; larger key means larger monomial in graded reverse-lex order."""
    return (sum(exps), tuple(-e for e in reversed(exps)))


class SparsePoly:
    """Immutable sparse polynomial ``{exponent tuple: nonzero int}``."""

    __slots__ = ("_terms", "_nvars", "_hash")

    def __init__(self, terms: Mapping[tuple, int] | Iterable[tuple[tuple, int]] = (), nvars: int | None = None):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple, int] = {}
        width = 0
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            width = max(width, len(exps))
            acc[exps] = acc.get(exps, 0) + int(c)
        if nvars is None:
            nvars = width
        if width > nvars:
            # allow trailing zero exponents beyond nvars only
            for exps in acc:
                if any(exps[nvars:]):
                    raise ValueError(f"monomial {exps} exceeds nvars={nvars}")
        clean = {}
        for exps, c in acc.items():
            if c:
                e = exps[:nvars] + (0,) * (nvars - len(exps))
                clean[e] = clean.get(e, 0) + c
        self._terms = {e: c for e, c in clean.items() if c}
        self._nvars = nvars
        self._hash = None

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, c: int, nvars: int) -> "SparsePoly":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def var(cls, i: int, nvars: int) -> "SparsePoly":
        if not 0 <= i < nvars:
            raise IndexError(f"variable x{i} outside nvars={nvars}")
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1}, nvars)

    @classmethod
    def linear(cls, coeffs: Sequence[int]) -> "SparsePoly":
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = c
        return cls(terms, n)

    # -- basic accessors ------------------------------------------------------
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> Mapping[tuple, int]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, var: int) -> int:
        if var >= self._nvars:
            return 0 if self._terms else -1
        return max((e[var] for e in self._terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def variables(self) -> list[int]:
        """Indices of variables that actually occur."""
        return [i for i in range(self._nvars) if any(e[i] for e in self._terms)]

    def coefficient(self, exps: Sequence[int]) -> int:
        exps = tuple(exps) + (0,) * (self._nvars - len(exps))
        return self._terms.get(exps, 0)

    def constant_term(self) -> int:
        return self._terms.get((0,) * self._nvars, 0)

    def content(self) -> int:
        return reduce(math.gcd, self._terms.values(), 0)

    def sorted_terms(self) -> list[tuple[tuple, int]]:
        """Terms in descending graded reverse-lex order."""
        return sorted(self._terms.items(), key=lambda t: grevlex_key(t[0]), reverse=True)

    def leading_term(self) -> tuple[tuple, int]:
        return max(self._terms.items(), key=lambda t: grevlex_key(t[0]))

    def with_nvars(self, nvars: int) -> "SparsePoly":
        if nvars == self._nvars:
            return self
        return SparsePoly(self._terms, nvars)

    # -- equality / hashing ---------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, int):
            return self == SparsePoly.constant(other, self._nvars)
        if not isinstance(other, SparsePoly):
            return NotImplemented
        n = max(self._nvars, other._nvars)
        return self.with_nvars(n)._terms == other.with_nvars(n)._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(_strip(e) + (c,) for e, c in self._terms.items()))
        return self._hash

    # -- arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            return other
        if isinstance(other, int):
            return SparsePoly.constant(other, self._nvars)
        raise TypeError(f"cannot combine SparsePoly with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        n = max(self._nvars, other._nvars)
        a, b = self.with_nvars(n), other.with_nvars(n)
        terms = dict(a._terms)
        for e, c in b._terms.items():
            terms[e] = terms.get(e, 0) + c
        return SparsePoly(terms, n)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly({e: -c for e, c in self._terms.items()}, self._nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            return SparsePoly({e: c * other for e, c in self._terms.items()}, self._nvars)
        other = self._coerce(other)
        n = max(self._nvars, other._nvars)
        a, b = self.with_nvars(n), other.with_nvars(n)
        terms: dict[tuple, int] = {}
        for ea, ca in a._terms.items():
            for eb, cb in b._terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                terms[e] = terms.get(e, 0) + ca * cb
        return SparsePoly(terms, n)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = SparsePoly.constant(1, self._nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def mod(self, m: int) -> "SparsePoly":
        """Coefficients reduced into ``[0, m)``; zero residues dropped."""
        return SparsePoly({e: c % m for e, c in self._terms.items()}, self._nvars)

    def primitive_part(self) -> "SparsePoly":
        g = self.content()
        if g == 0:
            return self
        if self.leading_term()[1] < 0:
            g = -g
        return SparsePoly({e: c // g for e, c in self._terms.items()}, self._nvars)

    # -- printing -------------------------------------------------------------
    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"SparsePoly({format_poly(self)!r}, nvars={self._nvars})"


def _strip(exps: tuple) -> tuple:
    i = len(exps)
    while i and exps[i - 1] == 0:
        i -= 1
    return exps[:i]


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|(x)(\d+)|(\^)|(\*)|([+-])|(\S))")


def parse_poly(text: str, nvars: int | None = None) -> SparsePoly:
    """Parse the ``x0..x15`` grammar.

    ``term ::= [sign] (integer | [integer '*'] factor ('*' factor)*)``,
    ``factor ::= 'x' index ['^' exponent]``.  No parentheses.
    """
    raw = text.encode("utf-8")
    s = raw.decode("ascii", errors="replace")
    tokens = []
    pos = 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if m is None:
            break
        start = m.start(m.lastindex) if m.lastindex else pos
        if m.group(7) is not None:
            raise PolySyntaxError(f"unexpected character {m.group(7)!r}", start)
        if m.group(1) is not None:
            tokens.append(("int", int(m.group(1)), start))
        elif m.group(2) is not None:
            tokens.append(("var", int(m.group(3)), start))
        elif m.group(4):
            tokens.append(("^", None, start))
        elif m.group(5):
            tokens.append(("*", None, start))
        elif m.group(6):
            tokens.append(("sign", m.group(6), start))
        pos = m.end()
    end = len(raw)

    terms: list[tuple[dict, int]] = []
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else ("eof", None, end)

    if not tokens:
        raise PolySyntaxError("empty polynomial", 0)
    first = True
    max_var = -1
    while True:
        sign = 1
        kind, val, off = peek()
        if kind == "sign":
            sign = -1 if val == "-" else 1
            i += 1
        elif not first:
            raise PolySyntaxError("expected '+' or '-'", off)
        first = False
        coeff = 1
        exps: dict[int, int] = {}
        kind, val, off = peek()
        if kind == "int":
            coeff = val
            i += 1
            if peek()[0] != "*":
                terms.append((exps, sign * coeff))
                if peek()[0] == "eof":
                    break
                continue
            i += 1
            kind, val, off = peek()
            if kind != "var":
                raise PolySyntaxError("expected variable after '*'", off)
        if kind != "var":
            raise PolySyntaxError("expected integer or variable", off)
        while True:
            kind, val, off = peek()
            if kind != "var":
                raise PolySyntaxError("expected variable", off)
            if val >= MAX_VARS:
                raise PolySyntaxError(f"variable x{val} beyond x{MAX_VARS - 1}", off)
            if nvars is not None and val >= nvars:
                raise PolySyntaxError(f"variable x{val} exceeds declared nvars={nvars}", off)
            i += 1
            e = 1
            if peek()[0] == "^":
                i += 1
                kind, ev, off = peek()
                if kind != "int":
                    raise PolySyntaxError("expected exponent", off)
                e = ev
                i += 1
            exps[val] = exps.get(val, 0) + e
            max_var = max(max_var, val)
            if peek()[0] == "*":
                i += 1
                continue
            break
        terms.append((exps, sign * coeff))
        if peek()[0] == "eof":
            break
    n = nvars if nvars is not None else max(max_var + 1, 1)
    out = {}
    for exps, c in terms:
        e = [0] * n
        for v, k in exps.items():
            e[v] = k
        t = tuple(e)
        out[t] = out.get(t, 0) + c
    return SparsePoly(out, n)


def format_poly(p: SparsePoly) -> str:
    """Canonical text: descending grevlex, explicit ``*``, no unary ``+``."""
    if p.is_zero():
        return "0"
    parts = []
    for k, (exps, c) in enumerate(p.sorted_terms()):
        factors = [f"x{i}" if e == 1 else f"x{i}^{e}" for i, e in enumerate(exps) if e]
        mag = abs(c)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = f"{mag}*" + "*".join(factors)
        if k == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


def read_poly_file(path, nvars: int | None = None) -> SparsePoly:
    """One polynomial per file; ``#`` starts a comment."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split("#", 1)[0] for ln in fh]
    return parse_poly(" ".join(lines).strip(), nvars)


# ---------------------------------------------------------------------------
# evaluation, derivatives, substitution
# ---------------------------------------------------------------------------

def eval_poly(p: SparsePoly, point: Sequence[int]) -> int:
    if len(point) != p.nvars:
        raise ValueError(f"point has {len(point)} coordinates, polynomial has {p.nvars} variables")
    total = 0
    for exps, c in p.items():
        v = c
        for x, e in zip(point, exps):
            if e:
                v *= x ** e
        total += v
    return total


def eval_mod(p: SparsePoly, point: Sequence[int], m: int) -> int:
    if len(point) != p.nvars:
        raise ValueError(f"point has {len(point)} coordinates, polynomial has {p.nvars} variables")
    total = 0
    for exps, c in p.items():
        v = c % m
        for x, e in zip(point, exps):
            if e:
                v = v * pow(x, e, m) % m
        total += v
    return total % m


def partial(p: SparsePoly, var: int) -> SparsePoly:
    if not 0 <= var < p.nvars:
        raise IndexError(f"variable x{var} outside nvars={p.nvars}")
    terms = {}
    for exps, c in p.items():
        e = exps[var]
        if e:
            ne = list(exps)
            ne[var] = e - 1
            terms[tuple(ne)] = c * e
    return SparsePoly(terms, p.nvars)


def gradient(p: SparsePoly) -> list[SparsePoly]:
    return [partial(p, i) for i in range(p.nvars)]


def substitute(p: SparsePoly, var: int, value: int | Fraction) -> SparsePoly:
    """Set ``x_var = value``.  A rational value ``a/b`` returns
    ``b^k * p(..., a/b, ...)`` with ``k = degree_in(p, var)`` so the result
    keeps integer coefficients; see :func:`substitute_rational`."""
    if isinstance(value, Fraction) and value.denominator != 1:
        return substitute_rational(p, var, value)[0]
    value = int(value)
    if not 0 <= var < p.nvars:
        raise IndexError(f"variable x{var} outside nvars={p.nvars}")
    terms: dict[tuple, int] = {}
    powers: dict[int, int] = {}
    for exps, c in p.items():
        e = exps[var]
        if e not in powers:
            powers[e] = value ** e
        ne = exps[:var] + (0,) + exps[var + 1:]
        terms[ne] = terms.get(ne, 0) + c * powers[e]
    return SparsePoly(terms, p.nvars)


def substitute_rational(p: SparsePoly, var: int, value: Fraction) -> tuple[SparsePoly, int]:
    """Return ``(b^k * p|_{x_var=a/b}, k)``."""
    value = Fraction(value)
    a, b = value.numerator, value.denominator
    k = max(p.degree_in(var), 0)
    terms: dict[tuple, int] = {}
    for exps, c in p.items():
        e = exps[var]
        ne = exps[:var] + (0,) + exps[var + 1:]
        terms[ne] = terms.get(ne, 0) + c * a ** e * b ** (k - e)
    return SparsePoly(terms, p.nvars), k


def drop_variable(p: SparsePoly, var: int) -> SparsePoly:
    """Remove an absent variable and shift higher indices down by one."""
    if p.degree_in(var) > 0:
        raise ValueError(f"x{var} still occurs")
    return SparsePoly({e[:var] + e[var + 1:]: c for e, c in p.items()}, p.nvars - 1)


def homogenize(p: SparsePoly, var: int = 0) -> SparsePoly:
    """Homogenize with ``x_var``, which must not occur in ``p``."""
    nvars = max(p.nvars, var + 1)
    q = p.with_nvars(nvars)
    if q.degree_in(var) > 0:
        raise ValueError(f"homogenizing variable x{var} occurs in the polynomial")
    d = q.total_degree()
    terms = {}
    for exps, c in q.items():
        ne = list(exps)
        ne[var] = d - sum(exps)
        terms[tuple(ne)] = c
    return SparsePoly(terms, nvars)


def dehomogenize(p: SparsePoly, var: int = 0) -> SparsePoly:
    return substitute(p, var, 1)


def monomials_of_degree(nvars: int, degree: int) -> list[tuple]:
    """All exponent tuples of the given total degree, descending grevlex."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    out.sort(key=grevlex_key, reverse=True)
    return out


def monomials_up_to(nvars: int, degree: int, variables: Sequence[int] | None = None) -> list[tuple]:
    """Monomials of total degree <= ``degree`` in ``variables``, descending grevlex."""
    variables = list(range(nvars)) if variables is None else list(variables)
    out = []
    for d in range(degree + 1):
        for sub in monomials_of_degree(len(variables), d):
            e = [0] * nvars
            for v, k in zip(variables, sub):
                e[v] = k
            out.append(tuple(e))
    out.sort(key=grevlex_key, reverse=True)
    return out


# ---------------------------------------------------------------------------
# linear changes of variables
# ---------------------------------------------------------------------------

class UnimodularMatrix:
    """Square integer matrix with determinant +-1."""

    __slots__ = ("entries", "det")

    def __init__(self, entries: Sequence[Sequence[int]]):
        rows = tuple(tuple(int(a) for a in row) for row in entries)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("matrix must be square and nonempty")
        from .linalg import det_exact

        det = det_exact(rows)
        if det not in (1, -1):
            raise ValueError(f"matrix is not unimodular (det={det})")
        self.entries = rows
        self.det = det

    @classmethod
    def identity(cls, n: int) -> "UnimodularMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def elementary(cls, n: int, i: int, j: int, c: int) -> "UnimodularMatrix":
        """Identity plus ``c`` at position ``(i, j)``, ``i != j``."""
        if i == j:
            raise ValueError("elementary shear needs i != j")
        rows = [[int(a == b) for b in range(n)] for a in range(n)]
        rows[i][j] = c
        return cls(rows)

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def entry_bound(self) -> int:
        return max(abs(a) for row in self.entries for a in row)

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        n = self.size
        return UnimodularMatrix([[sum(self.entries[i][k] * other.entries[k][j] for k in range(n))
                                  for j in range(n)] for i in range(n)])

    def inverse(self) -> "UnimodularMatrix":
        n = self.size
        aug = [[Fraction(a) for a in row] + [Fraction(int(i == j)) for j in range(n)]
               for i, row in enumerate(self.entries)]
        for col in range(n):
            piv = next(r for r in range(col, n) if aug[r][col] != 0)
            aug[col], aug[piv] = aug[piv], aug[col]
            pv = aug[col][col]
            aug[col] = [x / pv for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        inv = []
        for row in aug:
            vals = row[n:]
            if any(v.denominator != 1 for v in vals):
                raise ArithmeticError("non-integral inverse")
            inv.append([int(v) for v in vals])
        return UnimodularMatrix(inv)

    def __eq__(self, other):
        return isinstance(other, UnimodularMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"UnimodularMatrix({[list(r) for r in self.entries]})"


def apply_unimodular(p: SparsePoly, A: UnimodularMatrix, inverse: bool = False) -> SparsePoly:
    """Return ``p(A x)``, or ``p(A^{-1} x)`` when ``inverse`` is set."""
    if A.size != p.nvars:
        raise ValueError(f"matrix is {A.size}x{A.size}, polynomial has {p.nvars} variables")
    M = A.inverse() if inverse else A
    return compose_linear(p, M.entries)


def compose_linear(p: SparsePoly, rows: Sequence[Sequence[int]]) -> SparsePoly:
    """Substitute ``x_i -> sum_j rows[i][j] x_j`` (no invertibility check)."""
    n = p.nvars
    images = [SparsePoly.linear(rows[i]) for i in range(n)]
    cache: dict[tuple[int, int], SparsePoly] = {}

    def power(i: int, e: int) -> SparsePoly:
        key = (i, e)
        if key not in cache:
            cache[key] = images[i] ** e
        return cache[key]

    result = SparsePoly({}, n)
    for exps, c in p.items():
        term = SparsePoly.constant(c, n)
        for i, e in enumerate(exps):
            if e:
                term = term * power(i, e)
        result = result + term
    return result


# ---------------------------------------------------------------------------
# division
# ---------------------------------------------------------------------------

def _monomial_divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def divide(g: SparsePoly, f: SparsePoly) -> tuple[dict, dict] | None:
    """Exact division ``g / f`` over Q.  Returns the quotient terms (Fractions)
    or None if ``f`` does not divide ``g``."""
    if f.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    n = max(f.nvars, g.nvars)
    f = f.with_nvars(n)
    lt_e, lt_c = f.leading_term()
    f_terms = list(f.items())
    rem: dict[tuple, Fraction] = {e: Fraction(c) for e, c in g.with_nvars(n).items()}
    quot: dict[tuple, Fraction] = {}
    while rem:
        e, c = max(rem.items(), key=lambda t: grevlex_key(t[0]))
        if not _monomial_divides(lt_e, e):
            return None
        qe = tuple(x - y for x, y in zip(e, lt_e))
        qc = c / lt_c
        quot[qe] = qc
        for fe, fc in f_terms:
            te = tuple(x + y for x, y in zip(fe, qe))
            v = rem.get(te, 0) - qc * fc
            if v:
                rem[te] = v
            else:
                rem.pop(te, None)
    return quot


def divides(f: SparsePoly, g: SparsePoly) -> bool:
    """True iff ``g = f * h`` for some polynomial ``h`` with rational coefficients."""
    if f.is_zero():
        raise ValueError("divisor must be nonzero")
    if g.is_zero():
        return True
    return divide(g, f) is not None


# ---------------------------------------------------------------------------
# univariate integer roots
# ---------------------------------------------------------------------------

_SCAN_LIMIT = 200_000


def univariate_coefficients(p: SparsePoly) -> tuple[int, list[int]]:
    """``(var, [a0, a1, ..., ad])`` for a polynomial in one effective variable."""
    vs = p.variables()
    if len(vs) != 1:
        raise ValueError(f"expected exactly one variable of positive degree, found {len(vs)}")
    v = vs[0]
    d = p.degree_in(v)
    coeffs = [0] * (d + 1)
    for exps, c in p.items():
        coeffs[exps[v]] += c
    return v, coeffs


def _horner(coeffs: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def integer_roots_from_coeffs(coeffs: Sequence[int], bound: int | None = None) -> list[int]:
    """Distinct integer roots of ``sum coeffs[k] x^k`` (not identically zero),
    optionally restricted to ``|x| <= bound``."""
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        raise ValueError("zero polynomial: every integer is a root")
    roots = []
    j = 0
    while coeffs[j] == 0:
        j += 1
    if j:
        roots.append(0)
    core = coeffs[j:]
    if len(core) == 1:
        return roots
    a0, an = core[0], core[-1]
    # Cauchy bound on root magnitude
    cauchy = 1 + max(abs(c) for c in core[:-1]) // abs(an)
    limit = cauchy if bound is None else min(cauchy, bound)
    a0 = abs(a0)
    if min(limit, a0) <= _SCAN_LIMIT:
        cands = (t for t in range(1, min(limit, a0) + 1) if a0 % t == 0)
    else:
        from sympy import divisors

        cands = (t for t in divisors(a0) if t <= limit)
    for t in cands:
        for r in (t, -t):
            if _horner(core, r) == 0:
                roots.append(r)
    return sorted(roots)


def integer_roots_univariate(p: SparsePoly, bound: int | None = None) -> list[int]:
    """Sorted distinct integer roots of a polynomial in one effective variable."""
    if p.is_zero():
        raise ValueError("zero polynomial: every integer is a root")
    _, coeffs = univariate_coefficients(p)
    return integer_roots_from_coeffs(coeffs, bound)
