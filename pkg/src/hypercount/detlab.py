"""Determinant-method laboratory.

A prime plan fixes a distinguished prime ``r`` and small primes ``p_i``; the
integral points of ``Y`` in the box are split by their residue class modulo
``m = r * p_1 * ... * p_k`` and every class gets an explicit auxiliary
polynomial, interpolated exactly through the class points.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from multiprocessing import get_context
from typing import Sequence

import numpy as np
import sympy

from .counting import BoxSpec, CongruenceClass, count_affine, list_points
from .geometry import SMOOTH, Hypersurface, is_smooth_mod_p
from .linalg import rank_and_nullspace
from .poly import SparsePoly, divides, eval_poly, format_poly, monomials_up_to


@dataclass(frozen=True)
class PlanConstants:
    """Implied constants of the prime-plan conditions (configuration, not theory)."""

    C2: float = 4
    C3: float = 4
    C4: float = 1
    C5: float = 8

    def as_dict(self) -> dict:
        return {"C2": self.C2, "C3": self.C3, "C4": self.C4, "C5": self.C5}


DEFAULT_CONSTANTS = PlanConstants()


class PlanError(ValueError):
    pass


class AuxiliaryNotFound(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


def compute_K(B: float, d: int, eps: float = 0.0) -> float:
    """``B^(1/d^(1/3) + eps)``."""
    if B < 2:
        raise ValueError("B must be >= 2")
    if d < 2:
        raise ValueError("d must be >= 2")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return float(B) ** (1.0 / d ** (1.0 / 3.0) + eps)


@dataclass(frozen=True)
class PrimePlan:
    r: int
    primes: tuple[int, ...]
    B: int
    d: int
    eps: float
    K: float
    constants: PlanConstants = DEFAULT_CONSTANTS

    @property
    def q(self) -> int:
        return math.prod(self.primes)

    @property
    def modulus(self) -> int:
        return self.q * self.r

    def violations(self) -> list[str]:
        c = self.constants
        logB = math.log(self.B)
        out = []
        if not self.primes:
            out.append("plan needs at least one prime p_i")
        if len(set(self.primes)) != len(self.primes):
            out.append("primes not distinct")
        if self.r in self.primes:
            out.append("r among the p_i")
        for p in self.primes:
            if not logB <= p <= c.C2 * logB:
                out.append(f"p={p} outside [log B, C2 log B] = [{logB:.3f}, {c.C2 * logB:.3f}]")
        if len(self.primes) > c.C3 * logB:
            out.append(f"k={len(self.primes)} exceeds C3 log B")
        if self.K / self.modulus > c.C4:
            out.append(f"K/(q r) = {self.K / self.modulus:.4f} exceeds C4")
        if self.q > c.C5 * self.K * logB / self.r:
            out.append("q exceeds C5 K log B / r")
        return out

    def as_dict(self) -> dict:
        return {
            "r": self.r, "primes": list(self.primes), "q": self.q, "modulus": self.modulus,
            "B": self.B, "d": self.d, "eps": self.eps, "K": self.K,
            "constants": self.constants.as_dict(),
        }


def _nonsingular(Y: Hypersurface, p: int, smooth_kw: dict) -> bool:
    return is_smooth_mod_p(Y, p, **smooth_kw).status == SMOOTH


def select_primes(Y: Hypersurface, B: int, r: int, eps: float = 0.0,
                  constants: PlanConstants = DEFAULT_CONSTANTS, **smooth_kw) -> PrimePlan:
    """Greedily take the smallest non-singular primes ``p != r`` in
    ``[log B, C2 log B]`` until ``K/(q r) <= C4``."""
    if not sympy.isprime(r):
        raise PlanError(f"r={r} is not prime")
    if B < 2:
        raise PlanError("B must be >= 2")
    if not _nonsingular(Y, r, smooth_kw):
        raise PlanError(f"r={r} is not a non-singular prime for {Y}")
    K = compute_K(B, Y.degree, eps)
    logB = math.log(B)
    lo, hi = math.ceil(logB), math.floor(constants.C2 * logB)
    candidates = [p for p in sympy.primerange(max(lo, 2), hi + 1) if p != r]
    admissible = [p for p in candidates if _nonsingular(Y, p, smooth_kw)]
    if not admissible:
        raise PlanError(
            f"no non-singular primes in [{logB:.3f}, {constants.C2 * logB:.3f}] "
            f"(candidates {candidates})"
        )
    chosen: list[int] = []
    for p in admissible:
        if chosen and K / (r * math.prod(chosen)) <= constants.C4:
            break
        chosen.append(p)
    plan = PrimePlan(r, tuple(chosen), B, Y.degree, eps, K, constants)
    if K / plan.modulus > constants.C4:
        raise PlanError(
            f"insufficient non-singular primes in [{logB:.3f}, {constants.C2 * logB:.3f}]: "
            f"candidates {candidates}, admissible {admissible}, K={K:.4f}"
        )
    bad = plan.violations()
    if bad:
        raise PlanError("; ".join(bad))
    return plan


# ---------------------------------------------------------------------------
# auxiliary polynomials
# ---------------------------------------------------------------------------

@dataclass
class AuxCertificate:
    g: SparsePoly
    D: int
    cls: CongruenceClass | None
    points_covered: int
    vanishing: bool
    not_multiple: bool
    target_degree: float | None = None
    vacuous: bool = False

    @property
    def verified(self) -> bool:
        return self.vanishing and self.not_multiple

    def as_dict(self) -> dict:
        return {
            "g": format_poly(self.g),
            "D": self.D,
            "modulus": self.cls.q if self.cls else None,
            "residue": list(self.cls.z) if self.cls else None,
            "points_covered": self.points_covered,
            "vanishing": self.vanishing,
            "not_multiple": self.not_multiple,
            "target_degree": self.target_degree,
            "vacuous": self.vacuous,
        }


def _affine_point(pt: Sequence[int], nvars: int) -> tuple[int, ...]:
    """Affine points carry x1..xn; polynomial slots start at x0."""
    return (0,) + tuple(pt) if len(pt) == nvars - 1 else tuple(pt)


def find_auxiliary(f: SparsePoly, points: Sequence[Sequence[int]], Dmax: int,
                   cls: CongruenceClass | None = None) -> AuxCertificate:
    """Lowest-degree ``g`` vanishing on ``points`` with ``f`` not dividing ``g``.

    Points are affine (coordinates x1..xn).  The search runs D = 1..Dmax over
    the monomials of degree <= D and returns the first primitive kernel
    vector of the evaluation matrix that is not a multiple of ``f``.
    """
    if Dmax < 1:
        raise ValueError("Dmax must be >= 1")
    nvars = f.nvars
    if not points:
        return AuxCertificate(SparsePoly.constant(1, nvars), 0, cls, 0, True, True, vacuous=True)
    pts = [_affine_point(p, nvars) for p in points]
    variables = list(range(1, nvars))
    for D in range(1, Dmax + 1):
        monos = monomials_up_to(nvars, D, variables)
        rows = [[math.prod(x ** e for x, e in zip(pt, m) if e) for m in monos] for pt in pts]
        _, basis = rank_and_nullspace(rows)
        for v in basis:
            g = SparsePoly({m: c for m, c in zip(monos, v) if c}, nvars)
            if not divides(f, g):
                vanishing = all(eval_poly(g, pt) == 0 for pt in pts)
                return AuxCertificate(g, D, cls, len(pts), vanishing, True)
    raise AuxiliaryNotFound(
        f"no auxiliary polynomial of degree <= {Dmax} through {len(pts)} points avoids multiples of f"
    )


def gather_class_points(Y: Hypersurface, B: int, cls: CongruenceClass) -> list[tuple[int, ...]]:
    pts, _ = list_points(Y, BoxSpec(B), cls, cap=None)
    return pts


# ---------------------------------------------------------------------------
# covering report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LedgerRow:
    j: int
    degree_product: int
    curve_bound: float


@dataclass(frozen=True)
class IntersectionLedger:
    rows: tuple[LedgerRow, ...]

    @classmethod
    def build(cls, plan: PrimePlan) -> "IntersectionLedger":
        rows = []
        prod_j = 1
        prod_prev = 1
        for j, p in enumerate(plan.primes, start=1):
            prod_j *= p
            dj = plan.r ** 2 * prod_j * prod_prev
            rows.append(LedgerRow(j, dj, plan.K ** 2 / dj))
            prod_prev = prod_j
        return cls(tuple(rows))

    def as_list(self) -> list[dict]:
        return [{"j": r.j, "degree_product": str(r.degree_product), "curve_bound": r.curve_bound}
                for r in self.rows]


def affine_points_mod_p(Y: Hypersurface, p: int) -> int:
    """``#Y(F_p)`` by a vectorised scan of F_p^n."""
    n = Y.n
    if p ** n > 50_000_000:
        raise BudgetExceeded(f"F_{p}^{n} scan too large")
    grid = np.array(list(product(range(p), repeat=n)), dtype=np.int64).reshape(-1, n)
    val = np.zeros(grid.shape[0], dtype=np.int64)
    for exps, c in Y.poly.items():
        term = np.full(grid.shape[0], c % p, dtype=np.int64)
        for i, e in enumerate(exps[1:]):
            if e:
                term = term * pow_mod(grid[:, i], e, p) % p
        val = (val + term) % p
    return int((val == 0).sum())


def pow_mod(a: np.ndarray, e: int, p: int) -> np.ndarray:
    out = np.ones_like(a)
    base = a % p
    while e:
        if e & 1:
            out = out * base % p
        base = base * base % p
        e >>= 1
    return out


@dataclass
class CoveringReport:
    plan: PrimePlan
    certificates: list[AuxCertificate]
    total_classes: int
    vacuous_classes: int
    points_total: int
    points_covered: int
    ledger: IntersectionLedger
    target_degree: float
    Dmax: int
    confined: bool
    uncovered: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return 1.0 if self.points_total == 0 else self.points_covered / self.points_total

    @property
    def max_degree(self) -> int:
        return max((c.D for c in self.certificates), default=0)

    def degree_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for c in self.certificates:
            hist[c.D] = hist.get(c.D, 0) + 1
        return dict(sorted(hist.items()))

    @property
    def all_verified(self) -> bool:
        return all(c.verified for c in self.certificates)

    def as_dict(self) -> dict:
        return {
            "plan": self.plan.as_dict(),
            "total_classes": str(self.total_classes),
            "nonempty_classes": len(self.certificates),
            "vacuous_classes": str(self.vacuous_classes),
            "points_total": str(self.points_total),
            "points_covered": str(self.points_covered),
            "coverage": self.coverage,
            "target_degree": self.target_degree,
            "max_degree": self.max_degree,
            "degree_histogram": {str(k): v for k, v in self.degree_histogram().items()},
            "confined": self.confined,
            "all_verified": self.all_verified,
            "ledger": self.ledger.as_list(),
            "certificates": [c.as_dict() for c in self.certificates],
        }


def _certify_class(args):
    Y, B, cls, Dmax, target = args
    pts = gather_class_points(Y, B, cls)
    cert = find_auxiliary(Y.poly, pts, Dmax, cls)
    cert.target_degree = target
    return cert, pts


def covering_report(Y: Hypersurface, B: int, plan: PrimePlan, Dmax: int = 6,
                    class_budget: int = 10_000_000, workers: int = 1) -> CoveringReport:
    """Certify every residue class mod ``q r`` that meets the box, and check that
    the class polynomials cover every enumerated point."""
    if Y.projective:
        raise ValueError("covering_report works with affine hypersurfaces")
    bad = plan.violations()
    if bad:
        raise PlanError("; ".join(bad))
    m = plan.modulus
    total_classes = math.prod(affine_points_mod_p(Y, p) for p in (plan.r,) + plan.primes)
    if total_classes > class_budget:
        raise BudgetExceeded(f"{total_classes} classes exceed the budget of {class_budget}")
    all_points, _ = list_points(Y, BoxSpec(B), cap=None, workers=workers)
    residues = sorted({tuple(x % m for x in pt) for pt in all_points})
    target = plan.K / m + 1
    jobs = [(Y, B, CongruenceClass(m, z), Dmax, target) for z in residues]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("fork")) as ex:
            results = list(ex.map(_certify_class, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_certify_class(j) for j in jobs]
    certificates = [c for c, _ in results]
    gathered = set()
    covered = 0
    by_residue = {c.cls.z: c for c in certificates}
    for _, pts in results:
        gathered.update(pts)
    uncovered = []
    for pt in all_points:
        cert = by_residue.get(tuple(x % m for x in pt))
        if cert is not None and pt in gathered and eval_poly(cert.g, (0,) + pt) == 0:
            covered += 1
        else:
            uncovered.append(pt)
    return CoveringReport(
        plan=plan,
        certificates=certificates,
        total_classes=total_classes,
        vacuous_classes=total_classes - len(certificates),
        points_total=len(all_points),
        points_covered=covered,
        ledger=IntersectionLedger.build(plan),
        target_degree=target,
        Dmax=Dmax,
        confined=m > 2 * B + 1,
        uncovered=uncovered,
    )


def count_class_points(Y: Hypersurface, B: int, cls: CongruenceClass) -> int:
    return count_affine(Y, BoxSpec(B), cls).count
