"""Hyperplane slicing: bad-set scans, the slicing-matrix search and exact
slice-and-sum recursion.

Affine polynomials keep the x0 slot empty, so slicing ``x_var = b`` on an
affine hypersurface in A^n gives one in A^(n-1) whose variables are the
remaining x1..xn renumbered in order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import sympy

from .counting import BoxSpec, count_affine, count_projective, primitive_count
from .geometry import (
    DEFAULT_KMAX,
    DEFAULT_PRIMES,
    INDETERMINATE,
    SMOOTH,
    Hypersurface,
    certify_smooth_over_Q,
)
from .poly import (
    SparsePoly,
    UnimodularMatrix,
    apply_unimodular,
    dehomogenize,
    drop_variable,
    substitute,
)


def slice_poly(p: SparsePoly, var: int, b: int) -> SparsePoly:
    """``p`` with ``x_var = b``, the variable slot removed."""
    return drop_variable(substitute(p, var, b), var)


def _as_range(brange) -> list[int]:
    if isinstance(brange, tuple) and len(brange) == 2:
        lo, hi = brange
        return list(range(lo, hi + 1))
    return sorted(set(int(b) for b in brange))


# ---------------------------------------------------------------------------
# bad-set scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceOutcome:
    b: int
    degree: int
    dropped: bool
    status: str | None
    certifying_prime: int | None

    @property
    def bad(self) -> bool:
        return self.dropped or self.status != SMOOTH

    def as_dict(self) -> dict:
        return {"b": self.b, "degree": self.degree, "dropped": self.dropped,
                "status": self.status, "certifying_prime": self.certifying_prime}


@dataclass
class SliceScan:
    var: int
    brange: list[int]
    degree: int
    outcomes: list[SliceOutcome]

    @property
    def bad(self) -> list[int]:
        return [o.b for o in self.outcomes if o.bad]

    @property
    def proven_bad(self) -> list[int]:
        return [o.b for o in self.outcomes if o.dropped]

    @property
    def unresolved(self) -> list[int]:
        return [o.b for o in self.outcomes if not o.dropped and o.status == INDETERMINATE]

    def as_dict(self) -> dict:
        return {
            "var": self.var,
            "range": [self.brange[0], self.brange[-1]] if self.brange else [],
            "degree": self.degree,
            "bad": self.bad,
            "proven_bad": self.proven_bad,
            "unresolved": self.unresolved,
            "outcomes": [o.as_dict() for o in self.outcomes],
        }


def slice_scan(Y: Hypersurface, var: int, brange, primes: Sequence[int] = DEFAULT_PRIMES,
               kmax: int = DEFAULT_KMAX, **smooth_kw) -> SliceScan:
    """Classify each slice ``Y ∩ {x_var = b}``: degree drop or closure smoothness."""
    if Y.projective:
        raise ValueError("slice_scan works with affine hypersurfaces")
    if not 1 <= var <= Y.n:
        raise ValueError(f"variable x{var} is not an affine coordinate of A^{Y.n}")
    if Y.n < 2:
        raise ValueError("slicing needs at least two affine coordinates")
    d = Y.degree
    outcomes = []
    for b in _as_range(brange):
        s = slice_poly(Y.poly, var, b)
        deg = s.total_degree()
        if deg < d:
            outcomes.append(SliceOutcome(b, deg, True, None, None))
            continue
        H = Hypersurface(s, False, Y.n - 1)
        v = certify_smooth_over_Q(H.closure(), primes, kmax, **smooth_kw)
        outcomes.append(SliceOutcome(b, deg, False, v.status, v.certifying_prime))
    return SliceScan(var, _as_range(brange), d, outcomes)


def affine_chart(X: Hypersurface, A: UnimodularMatrix | None = None) -> Hypersurface:
    """``G(1, x1, ..., xn)`` with ``G = F ∘ A^{-1}``."""
    F = X.poly
    G = apply_unimodular(F, A, inverse=True) if A is not None else F
    return Hypersurface(dehomogenize(G, 0), False, X.n)


def candidate_matrices(size: int, entry_bound: int) -> Iterable[UnimodularMatrix]:
    """Identity, then ``E_ij(±c)`` by ``(c, i, j, sign)``, then ordered pairs of those."""
    yield UnimodularMatrix.identity(size)
    singles = [
        UnimodularMatrix.elementary(size, i, j, sign * c)
        for c in range(1, entry_bound + 1)
        for i in range(size)
        for j in range(size)
        if i != j
        for sign in (1, -1)
    ]
    yield from singles
    seen = {UnimodularMatrix.identity(size)} | set(singles)
    for E1, E2 in product(singles, repeat=2):
        M = E1 @ E2
        if M not in seen:
            seen.add(M)
            yield M


class SearchExhausted(RuntimeError):
    def __init__(self, message: str, best: UnimodularMatrix | None, best_scan: SliceScan | None):
        super().__init__(message)
        self.best = best
        self.best_scan = best_scan


def search_slicing_matrix(X: Hypersurface, entry_bound: int, brange, budget: int = 0,
                          primes: Sequence[int] = DEFAULT_PRIMES, kmax: int = DEFAULT_KMAX,
                          max_candidates: int | None = None, **smooth_kw) -> tuple[UnimodularMatrix, SliceScan]:
    """First candidate ``A`` whose affine chart has at most ``budget`` bad slices
    ``x_n = b`` over ``brange``."""
    if not X.projective:
        raise ValueError("search_slicing_matrix needs a projective hypersurface")
    if entry_bound < 0:
        raise ValueError("entry_bound must be >= 0")
    v = certify_smooth_over_Q(X, primes, kmax, **smooth_kw)
    if v.status != SMOOTH:
        raise ValueError(f"{X} is not certified smooth")
    best = best_scan = None
    for k, A in enumerate(candidate_matrices(X.n + 1, entry_bound)):
        if max_candidates is not None and k >= max_candidates:
            break
        Y = affine_chart(X, A)
        if Y.degree != X.degree:
            continue
        scan = slice_scan(Y, X.n, brange, primes, kmax, **smooth_kw)
        if len(scan.bad) <= budget:
            return A, scan
        if best_scan is None or len(scan.bad) < len(best_scan.bad):
            best, best_scan = A, scan
    raise SearchExhausted(
        f"no matrix with entries <= {entry_bound} gives <= {budget} bad slices; "
        f"best achieved {len(best_scan.bad) if best_scan else 'n/a'}",
        best, best_scan,
    )


# ---------------------------------------------------------------------------
# slice-and-sum recursion
# ---------------------------------------------------------------------------

def _coprime_box_count(m: int, B: int, g: int | None) -> int:
    """``#{x in [-B, B]^m : gcd(g, x) = 1}``; ``g = None`` means no condition."""
    if g is None:
        return (2 * B + 1) ** m
    g = abs(g)
    if g == 0:
        raise ValueError("primitive counts go through primitive_count")
    if m == 0:
        return 1 if g == 1 else 0
    total = 0
    primes = sympy.primefactors(g)
    for mask in range(1 << len(primes)):
        k = 1
        bits = 0
        for i, p in enumerate(primes):
            if mask >> i & 1:
                k *= p
                bits += 1
        total += (-1) ** bits * (2 * (B // k) + 1) ** m
    return total


def _affine_leaf(p: SparsePoly, m: int, B: int, coprime: int | None, mode: str, workers: int) -> tuple[int, str]:
    if p.is_zero():
        return _coprime_box_count(m, B, coprime), "box"
    if p.total_degree() < 1:
        return 0, "empty"
    rep = count_affine(Hypersurface(p, False, m), BoxSpec(B), mode=mode, workers=workers,
                       coprime_to=coprime)
    return rep.count, mode


def _projective_leaf(p: SparsePoly, B: int, mode: str, workers: int) -> tuple[int, str]:
    n = p.nvars - 1
    if p.is_zero():
        return primitive_count(n + 1, B), "subspace"
    if n == 0:
        return 0, "empty"
    rep = count_projective(Hypersurface(p, True, n), BoxSpec(B), mode=mode, workers=workers)
    return rep.count, mode


@dataclass
class RecursionNode:
    kind: str
    dim: int
    b: int | None
    count: int
    method: str
    coprime: int | None = None
    children: list["RecursionNode"] = field(default_factory=list)
    direct: int | None = None

    @property
    def exact(self) -> bool:
        return self.direct is None or self.direct == self.count

    def walk(self, level: int = 0):
        yield level, self
        for c in self.children:
            yield from c.walk(level + 1)

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "b": self.b, "count": str(self.count),
               "method": self.method}
        if self.coprime is not None:
            out["coprime_to"] = self.coprime
        if self.direct is not None:
            out["direct"] = str(self.direct)
            out["exact"] = self.exact
        if self.children:
            out["children"] = [c.as_dict() for c in self.children]
        return out


@dataclass
class RecursionTrace:
    root: RecursionNode
    B: int
    depth: int

    @property
    def consistent(self) -> bool:
        return all(node.exact for _, node in self.root.walk())

    def level_totals(self) -> list[int]:
        """Sum of counts over each level's nodes; leaves carried down to deeper levels."""
        totals = []
        for lvl in range(self.depth + 1):
            s = 0
            for level, node in self.root.walk():
                if level == lvl or (level < lvl and not node.children):
                    s += node.count
            totals.append(s)
        return totals

    def as_dict(self) -> dict:
        return {"B": str(self.B), "depth": self.depth, "consistent": self.consistent,
                "level_totals": [str(t) for t in self.level_totals()],
                "root": self.root.as_dict()}


def _affine_node(p: SparsePoly, m: int, B: int, coprime: int | None, b: int | None,
                 depth: int, mode: str, workers: int) -> RecursionNode:
    if depth == 0 or m == 0:
        count, method = _affine_leaf(p, m, B, coprime, mode, workers)
        return RecursionNode("affine", m, b, count, method, coprime)
    children = []
    for c in range(-B, B + 1):
        g = None if coprime is None else math.gcd(coprime, c)
        children.append(_affine_node(slice_poly(p, m, c), m - 1, B, g, c, depth - 1, mode, workers))
    direct, _ = _affine_leaf(p, m, B, coprime, mode, workers)
    return RecursionNode("affine", m, b, sum(ch.count for ch in children), "sum", coprime,
                         children, direct)


def _projective_node(F: SparsePoly, B: int, b: int | None, depth: int, mode: str, workers: int) -> RecursionNode:
    n = F.nvars - 1
    if depth == 0 or n == 0:
        count, method = _projective_leaf(F, B, mode, workers)
        return RecursionNode("projective", n, b, count, method)
    section = drop_variable(substitute(F, 0, 0), 0)
    children = [_projective_node(section, B, 0, depth - 1, mode, workers)]
    for c in range(1, B + 1):
        # x0 = c > 0 after normalisation; primitivity becomes gcd(c, x1..xn) = 1
        Y = substitute(F, 0, c)
        children.append(_affine_node(Y, n, B, c, c, depth - 1, mode, workers))
    direct, _ = _projective_leaf(F, B, mode, workers)
    return RecursionNode("projective", n, b, sum(ch.count for ch in children), "sum", None,
                         children, direct)


def recursive_count(H: Hypersurface, B: int, depth: int = 1, mode: str = "solve-var",
                    workers: int = 1) -> RecursionTrace:
    """Slice-and-sum count of ``H`` verified against direct counts at every node.

    Projective input splits into the section ``x0 = 0`` plus the affine slices
    ``x0 = b`` for ``1 <= b <= B`` (primitive representatives have first
    nonzero coordinate positive).  Affine input slices the last coordinate
    over ``[-B, B]``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > H.n:
        raise ValueError(f"depth {depth} exceeds the ambient dimension {H.n}")
    if H.projective:
        root = _projective_node(H.poly, B, None, depth, mode, workers)
    else:
        root = _affine_node(H.poly, H.n, B, None, None, depth, mode, workers)
    return RecursionTrace(root, B, depth)


def partition_check(Y: Hypersurface, B: int, var: int | None = None, brange=None,
                    mode: str = "solve-var", workers: int = 1) -> bool:
    """Do the slice counts over ``brange`` add up to the direct count?

    Affine: slices ``x_var = b``, default ``b in [-B, B]``.  Projective:
    ``b = 0`` is the section ``x_var = 0`` and ``b > 0`` the slices with
    ``gcd(b, rest) = 1``; default ``b in [0, B]``.
    """
    if Y.projective:
        var = 0 if var is None else var
        if not 0 <= var <= Y.n:
            raise ValueError(f"no variable x{var} in P^{Y.n}")
        perm = [var] + [i for i in range(Y.n + 1) if i != var]
        F = SparsePoly({tuple(e[i] for i in perm): c for e, c in Y.poly.items()}, Y.n + 1)
        values = _as_range(brange if brange is not None else (0, B))
        total = 0
        for b in values:
            if b == 0:
                total += _projective_leaf(drop_variable(substitute(F, 0, 0), 0), B, mode, workers)[0]
            elif b > 0:
                total += _affine_leaf(substitute(F, 0, b), Y.n, B, b, mode, workers)[0]
        return total == _projective_leaf(Y.poly, B, mode, workers)[0]
    var = Y.n if var is None else var
    if not 1 <= var <= Y.n:
        raise ValueError(f"variable x{var} is not an affine coordinate of A^{Y.n}")
    values = _as_range(brange if brange is not None else (-B, B))
    total = sum(_affine_leaf(slice_poly(Y.poly, var, b), Y.n - 1, B, None, mode, workers)[0]
                for b in values)
    return total == _affine_leaf(Y.poly, Y.n, B, None, mode, workers)[0]
