"""Hypersurface predicates: smoothness certificates, exponent formulas,
cylindricity counts and the split-shape detector."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import sympy
from sympy import Rational, cbrt, sqrt

from .finite_field import GF, projective_point_count, projective_points
from .linalg import det_mod_p, macaulay_det_mod_p, macaulay_size, rank_and_nullspace
from .poly import (
    SparsePoly,
    compose_linear,
    homogenize,
    partial,
)

DEFAULT_KMAX = 2
DEFAULT_POINT_BUDGET = 400_000
DEFAULT_MACAULAY_LIMIT = 1_500
DEFAULT_PRIMES = tuple(sympy.primerange(2, 51))


# ---------------------------------------------------------------------------
# hypersurfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hypersurface:
    """``V(poly)`` in P^n (variables x0..xn) or A^n (variables x1..xn)."""

    poly: SparsePoly
    projective: bool
    n: int

    def __post_init__(self):
        p = self.poly
        if p.is_zero() or p.total_degree() < 1:
            raise ValueError("hypersurface needs a non-constant polynomial")
        if p.nvars != self.n + 1:
            raise ValueError(f"expected {self.n + 1} variable slots, polynomial has {p.nvars}")
        if self.projective and not p.is_homogeneous():
            raise ValueError("projective hypersurface needs a homogeneous polynomial")
        if not self.projective and p.degree_in(0) > 0:
            raise ValueError("affine polynomials use x1..xn; x0 is reserved for homogenization")

    @classmethod
    def projective_from(cls, poly: SparsePoly, n: int | None = None) -> "Hypersurface":
        n = poly.nvars - 1 if n is None else n
        return cls(poly.with_nvars(n + 1), True, n)

    @classmethod
    def affine_from(cls, poly: SparsePoly, n: int | None = None) -> "Hypersurface":
        n = poly.nvars - 1 if n is None else n
        return cls(poly.with_nvars(n + 1), False, n)

    @property
    def degree(self) -> int:
        return self.poly.total_degree()

    @property
    def kind(self) -> str:
        return "projective" if self.projective else "affine"

    def closure(self) -> "Hypersurface":
        """Projective closure (homogenize with x0); projective input is returned as is."""
        if self.projective:
            return self
        return Hypersurface(homogenize(self.poly, 0), True, self.n)

    def __str__(self):
        space = "P" if self.projective else "A"
        return f"V({self.poly}) in {space}^{self.n}"


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def theta(d: int) -> sympy.Expr:
    """The piecewise exponent penalty; exact sympy value (surds in d)."""
    if d < 6:
        raise ValueError("theta is defined for d >= 6")
    d_ = sympy.Integer(d)
    if d >= 50:
        return sympy.Integer(0)
    if d >= 20:
        return Rational(11, 4) / cbrt(d_) - Rational(3, 4)
    if d >= 16:
        return 3 / cbrt(d_) + 1 / (3 * sqrt(d_)) - Rational(11, 12)
    if d >= 9:
        return 3 / cbrt(d_) + 2 / (3 * sqrt(d_)) - 1
    return 2 / sqrt(d_)


def theta_float(d: int) -> float:
    return float(theta(d))


@dataclass(frozen=True)
class ExponentTable:
    n: int
    d: int
    theta: float | None
    theta_exact: str | None
    dim_growth: int
    main_bound: float | None
    affine_bound: float | None
    p4_bound: float
    trivial_projective: int
    trivial_affine: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def exponent_table(n: int, d: int) -> ExponentTable:
    """Growth exponents attached to a degree-``d`` hypersurface in P^n / A^n."""
    if n < 2 or d < 2:
        raise ValueError("need n >= 2 and d >= 2")
    th = theta(d) if d >= 6 else None
    thf = float(th) if th is not None else None
    p4 = 2 + max(0.0, 45 / (16 * math.sqrt(d)) - 0.75)
    return ExponentTable(
        n=n,
        d=d,
        theta=thf,
        theta_exact=str(th) if th is not None else None,
        dim_growth=n - 1,
        main_bound=(n - 2 + thf) if thf is not None else None,
        affine_bound=(n - 3 + thf) if thf is not None else None,
        p4_bound=p4,
        trivial_projective=n,
        trivial_affine=n - 1,
    )


# ---------------------------------------------------------------------------
# smoothness
# ---------------------------------------------------------------------------

SMOOTH = "smooth"
SINGULAR = "singular"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class SmoothnessVerdict:
    status: str
    p: int | None = None
    witness: tuple[int, ...] | None = None
    field_degree: int | None = None
    certifying_prime: int | None = None
    degenerate: bool = False
    reason: str = ""
    notes: tuple[str, ...] = field(default=())

    @property
    def field_size(self) -> int | None:
        if self.p is None or self.field_degree is None:
            return None
        return self.p ** self.field_degree

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "p": self.p,
            "witness": list(self.witness) if self.witness is not None else None,
            "field_degree": self.field_degree,
            "certifying_prime": self.certifying_prime,
            "degenerate": self.degenerate,
            "reason": self.reason,
        }


def variable_blocks(poly: SparsePoly) -> list[list[int]]:
    """Partition of all variable indices into groups never mixed by a term.

    Variables that do not occur form singleton blocks.
    """
    parent = list(range(poly.nvars))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for exps, _ in poly.items():
        support = [i for i, e in enumerate(exps) if e]
        for a in support[1:]:
            ra, rb = find(a), find(support[0])
            if ra != rb:
                parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for i in range(poly.nvars):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def restrict_to(poly: SparsePoly, block: Sequence[int]) -> SparsePoly:
    """Terms supported on ``block``, re-indexed to ``0..len(block)-1``."""
    bset = set(block)
    terms = {}
    for exps, c in poly.items():
        if all(e == 0 or i in bset for i, e in enumerate(exps)):
            terms[tuple(exps[i] for i in block)] = c
    return SparsePoly(terms, len(block))


def _search_common_zeros(polys: Sequence[SparsePoly], p: int, k: int, m: int):
    """First normalized projective point over F_{p^k} where all ``polys``
    vanish, or None."""
    field_ = GF(p, k)
    for pts in projective_points(field_.q, m):
        for f in polys:
            if f.is_zero():
                continue
            pts = pts[field_.evaluate(f, pts) == 0]
            if not pts.shape[0]:
                break
        if pts.shape[0]:
            return tuple(int(x) for x in pts[0])
    return None


def _block_macaulay_nonzero(F_block: SparsePoly, p: int, limit: int, retries: int, seed: int) -> tuple[bool, str]:
    m = F_block.nvars
    d = F_block.total_degree()
    e = d - 1
    size = macaulay_size(m, e)
    if size > limit:
        return False, f"Macaulay matrix of size {size} exceeds limit {limit}"
    rng = random.Random(seed)
    candidate = F_block
    for attempt in range(retries + 1):
        forms = [partial(candidate, i).mod(p) for i in range(m)]
        if all(not f.is_zero() for f in forms):
            if macaulay_det_mod_p(forms, p) != 0:
                return True, ""
        if m <= 2:
            # Sylvester case: the determinant is the resultant itself
            return False, "resultant of partial derivatives vanishes"
        while True:
            rows = [[rng.randrange(p) for _ in range(m)] for _ in range(m)]
            if det_mod_p(rows, p):
                break
        candidate = compose_linear(F_block, rows).mod(p)
    return False, "Macaulay determinant vanishes mod p"


def is_smooth_mod_p(
    H: Hypersurface,
    p: int,
    kmax: int = DEFAULT_KMAX,
    point_budget: int = DEFAULT_POINT_BUDGET,
    macaulay_limit: int = DEFAULT_MACAULAY_LIMIT,
    retries: int = 3,
) -> SmoothnessVerdict:
    """Decide smoothness of the reduction of ``H`` (its closure, if affine) mod ``p``.

    Singular points are searched over F_{p^k}, k = 1..kmax.  A Smooth answer
    requires a nonzero Macaulay determinant of the partial derivatives for
    every variable block of the form, which rules out singular points over
    the algebraic closure.
    """
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    X = H.closure()
    F = X.poly
    d = X.degree
    m = X.n + 1
    Fp = F.mod(p)
    if Fp.is_zero():
        return SmoothnessVerdict(SINGULAR, p, degenerate=True,
                                 reason="form vanishes identically mod p")
    if d == 1:
        return SmoothnessVerdict(SMOOTH, p, certifying_prime=p, reason="hyperplane")
    grads = [partial(F, i).mod(p) for i in range(m)]
    notes = []

    if all(g.is_zero() for g in grads):
        # every point of the reduction is singular
        for k in range(1, kmax + 1):
            q = p ** k
            if projective_point_count(q, m) > point_budget:
                notes.append(f"k={k}: search skipped (budget)")
                continue
            w = _search_common_zeros([Fp], p, k, m)
            if w is not None:
                return SmoothnessVerdict(SINGULAR, p, witness=w, field_degree=k, degenerate=True,
                                         reason="all partial derivatives vanish mod p")
        return SmoothnessVerdict(SINGULAR, p, degenerate=True,
                                 reason="all partial derivatives vanish mod p", notes=tuple(notes))

    blocks = variable_blocks(Fp)
    for k in range(1, kmax + 1):
        q = p ** k
        if projective_point_count(q, m) <= point_budget:
            w = _search_common_zeros([Fp] + grads, p, k, m)
            if w is not None:
                return SmoothnessVerdict(SINGULAR, p, witness=w, field_degree=k,
                                         reason="common zero of F and its partials")
            continue
        for block in blocks:
            if projective_point_count(q, len(block)) > point_budget:
                notes.append(f"k={k}: block {block} search skipped (budget)")
                continue
            Fb = restrict_to(Fp, block)
            polys = [Fb] + [partial(Fb, i).mod(p) for i in range(len(block))]
            wb = _search_common_zeros(polys, p, k, len(block))
            if wb is not None:
                w = [0] * m
                for i, v in zip(block, wb):
                    w[i] = v
                return SmoothnessVerdict(SINGULAR, p, witness=tuple(w), field_degree=k,
                                         reason="common zero of F and its partials")

    for bi, block in enumerate(blocks):
        Fb = restrict_to(Fp, block)
        if Fb.is_zero():
            # x_i absent: the coordinate point e_i is singular
            w = tuple(int(i == block[0]) for i in range(m))
            return SmoothnessVerdict(SINGULAR, p, witness=w, field_degree=1,
                                     reason="variable absent from the form")
        ok, why = _block_macaulay_nonzero(Fb, p, macaulay_limit, retries, seed=p * 1009 + bi)
        if not ok:
            return SmoothnessVerdict(INDETERMINATE, p, reason=f"block {block}: {why}", notes=tuple(notes))
    return SmoothnessVerdict(SMOOTH, p, certifying_prime=p,
                             reason=f"nonzero Macaulay determinants on blocks {blocks}",
                             notes=tuple(notes))


def verify_witness(H: Hypersurface, verdict: SmoothnessVerdict) -> bool:
    """Re-evaluate F and every partial derivative at a Singular witness."""
    if verdict.status != SINGULAR or verdict.witness is None:
        return False
    X = H.closure()
    field_ = GF(verdict.p, verdict.field_degree)
    polys = [X.poly] + [partial(X.poly, i) for i in range(X.n + 1)]
    return all(field_.evaluate_point(f, verdict.witness) == 0 for f in polys)


def certify_smooth_over_Q(
    H: Hypersurface,
    primes: Iterable[int] = DEFAULT_PRIMES,
    kmax: int = DEFAULT_KMAX,
    **kwargs,
) -> SmoothnessVerdict:
    """Smooth over Q if some reduction of the same degree is smooth.

    Returns the first Smooth verdict, otherwise Indeterminate (a singular
    reduction does not prove singularity in characteristic 0).
    """
    primes = list(primes)
    if not primes:
        raise ValueError("empty prime budget")
    seen = []
    for p in primes:
        v = is_smooth_mod_p(H, p, kmax, **kwargs)
        if v.status == SMOOTH:
            return v
        seen.append(f"{p}:{v.status}")
    return SmoothnessVerdict(INDETERMINATE, reason="no smooth reduction in budget", notes=tuple(seen))


def classify_primes(H: Hypersurface, bound: int, kmax: int = DEFAULT_KMAX, **kwargs) -> dict[int, SmoothnessVerdict]:
    return {p: is_smooth_mod_p(H, p, kmax, **kwargs) for p in sympy.primerange(2, bound + 1)}


def nonsingular_primes(H: Hypersurface, bound: int, kmax: int = DEFAULT_KMAX, **kwargs) -> list[int]:
    """Primes ``<= bound`` at which the reduction is certified smooth."""
    return [p for p, v in classify_primes(H, bound, kmax, **kwargs).items() if v.status == SMOOTH]


# ---------------------------------------------------------------------------
# cylindricity and split shape
# ---------------------------------------------------------------------------

def essential_variable_count(f: SparsePoly) -> int:
    """Number of linear forms ``f`` genuinely depends on.

    Equals ``n`` minus the dimension of ``{v : sum_i v_i df/dx_i = 0}``,
    i.e. the rank of the partial derivatives as coefficient vectors.
    """
    if f.is_zero():
        raise ValueError("zero polynomial")
    grads = [partial(f, i) for i in range(f.nvars)]
    monos = sorted({e for g in grads for e, _ in g.items()})
    if not monos:
        return 0
    index = {e: r for r, e in enumerate(monos)}
    rows = [[0] * f.nvars for _ in monos]
    for i, g in enumerate(grads):
        for e, c in g.items():
            rows[index[e]][i] = c
    rank, _ = rank_and_nullspace(rows)
    return rank


@dataclass(frozen=True)
class SplitShape:
    f0: SparsePoly
    g: SparsePoly
    degenerate: bool


def detect_split_shape(f: SparsePoly, curve_vars: Sequence[int] = (1, 2), split_var: int = 3) -> SplitShape | None:
    """Write ``f = f0(x1, x2) + x3 * g`` in the given coordinates, if possible."""
    if f.is_zero():
        raise ValueError("zero polynomial")
    allowed = set(curve_vars)
    f0, g = {}, {}
    for exps, c in f.items():
        if all(e == 0 or i in allowed for i, e in enumerate(exps)):
            f0[exps] = c
        elif exps[split_var] > 0:
            ne = list(exps)
            ne[split_var] -= 1
            g[tuple(ne)] = c
        else:
            return None
    F0 = SparsePoly(f0, f.nvars)
    return SplitShape(F0, SparsePoly(g, f.nvars), degenerate=F0.is_zero())
