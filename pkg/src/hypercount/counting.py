"""Exact counts of integral / primitive points of bounded height.

The default ``solve-var`` mode walks the fibres over the first n-1
coordinates (stepping through a congruence class directly) and finds the
last coordinate from the integer roots of the fibre polynomial.  ``scan``
evaluates the polynomial on the whole class-restricted box, and ``oracle``
is the naive reference: every box point, congruences tested by filtering.

When every value that can occur is provably below 2**62 the kernels run on
numpy int64 arrays; otherwise they fall back to Python integers.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from multiprocessing import get_context
from typing import Mapping, Sequence

import numpy as np
from sympy import mobius

from .geometry import Hypersurface
from .poly import SparsePoly, integer_roots_from_coeffs, substitute

MODES = ("solve-var", "scan", "oracle")
INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class BoxSpec:
    """``|x_i| <= B`` with optional per-coordinate ``(lo, hi)`` overrides."""

    B: int
    overrides: Mapping[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("height bound must be >= 1")

    def ranges(self, n: int) -> list[tuple[int, int]]:
        out = []
        for i in range(n):
            lo, hi = self.overrides.get(i, (-self.B, self.B))
            out.append((lo, hi))
        return out


@dataclass(frozen=True)
class CongruenceClass:
    """Points with ``x_i = z_i (mod q)``; ``q = 1`` means no condition."""

    q: int
    z: tuple[int, ...]

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("modulus must be positive")
        if any(not 0 <= zi < self.q for zi in self.z):
            raise ValueError("residues must lie in [0, q)")

    @classmethod
    def trivial(cls, n: int) -> "CongruenceClass":
        return cls(1, (0,) * n)

    @classmethod
    def of_point(cls, point: Sequence[int], q: int) -> "CongruenceClass":
        return cls(q, tuple(x % q for x in point))


@dataclass
class CountReport:
    count: int
    B: int
    method: str
    kind: str
    n: int
    degree: int
    modulus: int = 1
    residue: tuple[int, ...] = ()
    workers: int = 1
    shards: list[tuple[int, int]] = field(default_factory=list)
    wall_ms: float = 0.0
    points: list[tuple[int, ...]] = field(default_factory=list)
    degenerate_fibers: int = 0
    constant_fibers: int = 0

    def trivial_bound(self) -> int:
        """``d (2B+1)^(n-1)`` for affine counts, ``d (2B+1)^n`` for projective ones."""
        exp = self.n - 1 if self.kind == "affine" else self.n
        return self.degree * (2 * self.B + 1) ** exp

    def trivial_bound_applies(self) -> bool:
        return self.kind != "affine" or (self.degenerate_fibers == 0 and self.constant_fibers == 0) \
            or self.method == "oracle"

    def within_trivial_bound(self) -> bool:
        return self.count <= self.trivial_bound()


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Problem:
    terms: tuple[tuple[tuple[int, ...], int], ...]
    nv: int
    ranges: tuple[tuple[int, int], ...]
    q: int
    z: tuple[int, ...]
    coprime: int | None
    cap: int | None
    mode: str


def _class_values(lo: int, hi: int, q: int, z: int) -> np.ndarray:
    start = lo + ((z - lo) % q)
    return np.arange(start, hi + 1, q, dtype=object if max(abs(lo), abs(hi)) >= INT64_SAFE else np.int64)


def _int64_safe(prob: _Problem) -> bool:
    if not prob.terms:
        return True
    M = max(max(abs(lo), abs(hi)) for lo, hi in prob.ranges)
    M = max(M, 1)
    d = max(sum(e) for e, _ in prob.terms)
    bound = sum(abs(c) for _, c in prob.terms) * M ** d
    return bound < INT64_SAFE and M < INT64_SAFE


def _gcd_ok(prob: _Problem, coords) -> bool:
    if prob.coprime is None:
        return True
    return reduce(math.gcd, coords, prob.coprime) == 1


def _split_last(prob: _Problem):
    """Coefficient polynomials of the last variable: {j: [(fiber exps, c)]}."""
    out: dict[int, list] = {}
    for exps, c in prob.terms:
        out.setdefault(exps[-1], []).append((exps[:-1], c))
    return out


def _fiber_grid(values: list[np.ndarray]) -> np.ndarray:
    if not values:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*values, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _eval_terms_np(terms, X: np.ndarray) -> np.ndarray:
    out = np.zeros(X.shape[0], dtype=np.int64)
    cache = {}
    for exps, c in terms:
        v = np.full(X.shape[0], c, dtype=np.int64)
        for i, e in enumerate(exps):
            if e:
                if (i, e) not in cache:
                    cache[(i, e)] = X[:, i] ** e
                v = v * cache[(i, e)]
        out += v
    return out


def _gcd_rows(prob: _Problem, pts: np.ndarray) -> np.ndarray:
    if prob.coprime is None or pts.shape[0] == 0:
        return np.ones(pts.shape[0], dtype=bool)
    g = np.full(pts.shape[0], prob.coprime, dtype=np.int64)
    for i in range(pts.shape[1]):
        g = np.gcd(g, pts[:, i])
    return g == 1


def _shard_solve_np(prob: _Problem, outer: np.ndarray):
    k = prob.nv
    coeff_terms = _split_last(prob)
    dmax = max(coeff_terms) if coeff_terms else 0
    lo, hi = prob.ranges[-1]
    T = _class_values(lo, hi, prob.q, prob.z[-1])
    fiber_vals = [_class_values(*prob.ranges[i], prob.q, prob.z[i]) for i in range(k - 1)]
    count = 0
    points = []
    degenerate = constant = 0
    outer_iter = outer if k > 1 else [None]
    for v in outer_iter:
        if k > 1:
            vals = [np.array([v], dtype=np.int64)] + fiber_vals[1:]
        else:
            vals = []
        X = _fiber_grid(vals)
        F = X.shape[0]
        C = np.zeros((F, dmax + 1), dtype=np.int64)
        for j, tl in coeff_terms.items():
            C[:, j] = _eval_terms_np(tl, X)
        nz = C != 0
        allzero = ~nz.any(axis=1)
        const = nz[:, 0] & ~nz[:, 1:].any(axis=1)
        degenerate += int(allzero.sum())
        constant += int(const.sum())
        hit_f, hit_t = [], []
        for fi in np.nonzero(allzero)[0]:
            hit_f.append(np.full(T.size, fi, dtype=np.int64))
            hit_t.append(T)
        live = ~allzero & ~const
        if live.any() and T.size:
            first = np.argmax(nz, axis=1)
            trailing = C[np.arange(F), first]
            for t in T.tolist():
                if t == 0:
                    sel = np.nonzero(live & (first > 0))[0]
                else:
                    sel = np.nonzero(live & (trailing % t == 0))[0]
                    if sel.size:
                        acc = np.zeros(sel.size, dtype=np.int64)
                        for j in range(dmax, -1, -1):
                            acc = acc * t + C[sel, j]
                        sel = sel[acc == 0]
                if sel.size:
                    hit_f.append(sel)
                    hit_t.append(np.full(sel.size, t, dtype=np.int64))
        if not hit_f:
            continue
        hf = np.concatenate(hit_f)
        ht = np.concatenate(hit_t).astype(np.int64)
        pts = np.concatenate([X[hf], ht[:, None]], axis=1)
        pts = pts[_gcd_rows(prob, pts)]
        count += pts.shape[0]
        if prob.cap is None or len(points) < prob.cap:
            order = np.lexsort(pts.T[::-1]) if pts.shape[0] else []
            pts = pts[order]
            need = pts.shape[0] if prob.cap is None else prob.cap - len(points)
            points.extend(tuple(int(x) for x in row) for row in pts[:need])
    return count, points, degenerate, constant


def _shard_solve_py(prob: _Problem, outer):
    k = prob.nv
    coeff_terms = _split_last(prob)
    dmax = max(coeff_terms) if coeff_terms else 0
    lo, hi = prob.ranges[-1]
    tb = max(abs(lo), abs(hi))
    T = list(range(lo + ((prob.z[-1] - lo) % prob.q), hi + 1, prob.q))
    fiber_vals = [list(range(a + ((prob.z[i] - a) % prob.q), b + 1, prob.q))
                  for i, (a, b) in enumerate(prob.ranges[:-1])]
    if k > 1:
        fiber_vals[0] = [int(v) for v in outer]
    count = 0
    points = []
    degenerate = constant = 0
    for fib in itertools.product(*fiber_vals):
        coeffs = [0] * (dmax + 1)
        for j, tl in coeff_terms.items():
            s = 0
            for exps, c in tl:
                t = c
                for x, e in zip(fib, exps):
                    if e:
                        t *= x ** e
                s += t
            coeffs[j] = s
        if not any(coeffs):
            degenerate += 1
            roots = T
        elif not any(coeffs[1:]):
            constant += 1
            continue
        else:
            roots = [r for r in integer_roots_from_coeffs(coeffs, tb)
                     if lo <= r <= hi and (r - prob.z[-1]) % prob.q == 0]
        for r in roots:
            pt = fib + (r,)
            if _gcd_ok(prob, pt):
                count += 1
                if prob.cap is None or len(points) < prob.cap:
                    points.append(pt)
    return count, points, degenerate, constant


def _shard_scan(prob: _Problem, outer, naive: bool):
    """Brute-force evaluation; ``naive`` filters congruences instead of striding."""
    k = prob.nv
    q = 1 if naive else prob.q
    z = (0,) * k if naive else prob.z
    vals = [list(range(a + ((z[i] - a) % q), b + 1, q)) for i, (a, b) in enumerate(prob.ranges)]
    vals[0] = [int(v) for v in outer]
    count = 0
    points = []
    if _int64_safe(prob):
        for v in vals[0]:
            X = _fiber_grid([np.array([v], dtype=np.int64)] + [np.array(x, dtype=np.int64) for x in vals[1:]])
            keep = _eval_terms_np(prob.terms, X) == 0
            if naive and prob.q > 1:
                keep &= ((X - np.array(prob.z, dtype=np.int64)) % prob.q == 0).all(axis=1)
            pts = X[keep]
            pts = pts[_gcd_rows(prob, pts)]
            count += pts.shape[0]
            if prob.cap is None or len(points) < prob.cap:
                need = pts.shape[0] if prob.cap is None else prob.cap - len(points)
                points.extend(tuple(int(x) for x in row) for row in pts[:need])
        return count, points, 0, 0
    for pt in itertools.product(*vals):
        if naive and prob.q > 1 and any((x - zi) % prob.q for x, zi in zip(pt, prob.z)):
            continue
        s = 0
        for exps, c in prob.terms:
            t = c
            for x, e in zip(pt, exps):
                if e:
                    t *= x ** e
            s += t
        if s == 0 and _gcd_ok(prob, pt):
            count += 1
            if prob.cap is None or len(points) < prob.cap:
                points.append(pt)
    return count, points, 0, 0


def _run_shard(prob: _Problem, outer):
    if prob.mode == "solve-var":
        if prob.nv == 1:
            outer = []
        if _int64_safe(prob):
            return _shard_solve_np(prob, np.asarray(outer, dtype=np.int64))
        return _shard_solve_py(prob, outer)
    return _shard_scan(prob, outer, naive=(prob.mode == "oracle"))


def _outer_values(prob: _Problem) -> list[int]:
    lo, hi = prob.ranges[0]
    q, z = (1, 0) if prob.mode == "oracle" else (prob.q, prob.z[0])
    return list(range(lo + ((z - lo) % q), hi + 1, q))


def _shard_layout(values: list[int], workers: int) -> list[list[int]]:
    if not values:
        return [[]]
    workers = max(1, min(workers, len(values)))
    size, extra = divmod(len(values), workers)
    out, start = [], 0
    for w in range(workers):
        end = start + size + (1 if w < extra else 0)
        out.append(values[start:end])
        start = end
    return out


def _solve(prob: _Problem, workers: int):
    if prob.nv == 1 and prob.mode == "solve-var":
        shards = [[None]]
    else:
        shards = _shard_layout(_outer_values(prob), workers)
    if workers > 1 and len(shards) > 1:
        with ProcessPoolExecutor(max_workers=len(shards), mp_context=get_context("fork")) as ex:
            results = list(ex.map(_run_shard, [prob] * len(shards), shards))
    else:
        results = [_run_shard(prob, s) for s in shards]
    count = sum(r[0] for r in results)
    points = []
    for r in results:
        points.extend(r[1])
    if prob.cap is not None:
        points = points[: prob.cap]
    layout = [(s[0], s[-1]) if s and s[0] is not None else (0, 0) for s in shards]
    return count, points, sum(r[2] for r in results), sum(r[3] for r in results), layout


def _kernel_terms(poly: SparsePoly, variables: Sequence[int]) -> tuple:
    return tuple((tuple(exps[v] for v in variables), c) for exps, c in poly.items())


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("HC_WORKERS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# public counters
# ---------------------------------------------------------------------------

def _affine_problem(Y: Hypersurface, box: BoxSpec, cls: CongruenceClass | None, mode: str,
                    coprime: int | None, cap: int | None) -> _Problem:
    if Y.projective:
        raise ValueError("count_affine needs an affine hypersurface")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    n = Y.n
    cls = cls or CongruenceClass.trivial(n)
    if len(cls.z) != n:
        raise ValueError(f"class has {len(cls.z)} residues, hypersurface lives in A^{n}")
    if cap is not None and cap < 0:
        raise ValueError("cap must be non-negative")
    return _Problem(
        terms=_kernel_terms(Y.poly, range(1, n + 1)),
        nv=n,
        ranges=tuple(box.ranges(n)),
        q=cls.q,
        z=cls.z,
        coprime=coprime,
        cap=cap,
        mode=mode,
    )


def count_affine(
    Y: Hypersurface,
    box: BoxSpec | int,
    cls: CongruenceClass | None = None,
    mode: str = "solve-var",
    workers: int = 1,
    coprime_to: int | None = None,
    cap: int | None = 0,
) -> CountReport:
    """``#{x in Z^n : |x_i| <= B, x = z (mod q), f(x) = 0}``.

    ``coprime_to=g`` additionally requires ``gcd(g, x_1, ..., x_n) = 1``.
    ``cap`` points are kept in lexicographic order (``None`` keeps all).
    """
    if isinstance(box, int):
        box = BoxSpec(box)
    t0 = time.perf_counter()
    prob = _affine_problem(Y, box, cls, mode, coprime_to, cap)
    count, points, deg, const, layout = _solve(prob, workers)
    return CountReport(
        count=count, B=box.B, method=mode, kind="affine", n=Y.n, degree=Y.degree,
        modulus=prob.q, residue=prob.z, workers=workers, shards=layout,
        wall_ms=(time.perf_counter() - t0) * 1000, points=points,
        degenerate_fibers=deg, constant_fibers=const,
    )


def list_points(Y: Hypersurface, box: BoxSpec | int, cls: CongruenceClass | None = None,
                cap: int | None = None, mode: str = "solve-var", workers: int = 1) -> tuple[list[tuple[int, ...]], int]:
    """First ``cap`` points in lexicographic order and the total count."""
    if cap == 0:
        raise ValueError("cap must be positive (or None for all points)")
    rep = count_affine(Y, box, cls, mode=mode, workers=workers, cap=cap)
    return rep.points, rep.count


def _primitive_sub(F: SparsePoly, lead: int, B: int, mode: str, workers: int, cap: int | None):
    """Primitive vectors with ``x_0 = .. = x_{lead-1} = 0`` and ``1 <= x_lead <= B``."""
    G = F
    for i in range(lead):
        G = substitute(G, i, 0)
    variables = list(range(lead, F.nvars))
    ranges = [(1, B)] + [(-B, B)] * (len(variables) - 1)
    prob = _Problem(
        terms=_kernel_terms(G, variables), nv=len(variables), ranges=tuple(ranges),
        q=1, z=(0,) * len(variables), coprime=0, cap=cap, mode=mode,
    )
    count, pts, deg, const, layout = _solve(prob, workers)
    pts = [(0,) * lead + p for p in pts]
    return count, pts, deg, const, layout


def count_projective(X: Hypersurface, box: BoxSpec | int, mode: str = "solve-var",
                     workers: int = 1, cap: int | None = 0) -> CountReport:
    """Primitive integer points of height ``<= B`` on ``X``, one per projective point
    (first nonzero coordinate positive)."""
    if isinstance(box, int):
        box = BoxSpec(box)
    if not X.projective:
        raise ValueError("count_projective needs a projective hypersurface")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    t0 = time.perf_counter()
    total = deg = const = 0
    points: list = []
    layout = []
    for lead in range(X.n + 1):
        remaining = None if cap is None else max(cap - len(points), 0)
        c, pts, dg, cs, lay = _primitive_sub(X.poly, lead, box.B, mode, workers, remaining)
        total += c
        deg += dg
        const += cs
        points.extend(pts)
        layout.extend(lay)
    return CountReport(
        count=total, B=box.B, method=mode, kind="projective", n=X.n, degree=X.degree,
        workers=workers, shards=layout, wall_ms=(time.perf_counter() - t0) * 1000,
        points=points, degenerate_fibers=deg, constant_fibers=const,
    )


def primitive_count(m: int, B: int) -> int:
    """Primitive vectors in ``[-B, B]^m`` up to sign (Moebius inversion)."""
    if m < 1:
        raise ValueError("need at least one coordinate")
    total = sum(int(mobius(k)) * ((2 * (B // k) + 1) ** m - 1) for k in range(1, B + 1))
    return total // 2


def count_on_coordinate_subspace(X: Hypersurface, zeroed: Sequence[int], box: BoxSpec | int,
                                 mode: str = "solve-var", workers: int = 1) -> CountReport:
    """Points of ``X`` with the ``zeroed`` coordinates equal to 0.

    The report describes ``X`` itself (ambient ``n``, degree of ``X``), so its
    trivial bound is the one for ``X``.
    """
    if isinstance(box, int):
        box = BoxSpec(box)
    if not X.projective:
        raise ValueError("coordinate-subspace counts need a projective hypersurface")
    zeroed = sorted(set(zeroed))
    if not zeroed:
        raise ValueError("zeroed set must be nonempty")
    keep = [i for i in range(X.n + 1) if i not in zeroed]
    if not keep:
        raise ValueError("zeroing every coordinate leaves an empty support")
    t0 = time.perf_counter()
    G = X.poly
    for i in zeroed:
        G = substitute(G, i, 0)
    restricted = SparsePoly({tuple(e[i] for i in keep): c for e, c in G.items()}, len(keep))
    if restricted.is_zero():
        return CountReport(
            count=primitive_count(len(keep), box.B), B=box.B, method="subspace",
            kind="projective", n=X.n, degree=X.degree,
            wall_ms=(time.perf_counter() - t0) * 1000,
        )
    sub = Hypersurface(restricted, True, len(keep) - 1)
    rep = count_projective(sub, box, mode=mode, workers=workers)
    rep.n, rep.degree = X.n, X.degree
    rep.wall_ms = (time.perf_counter() - t0) * 1000
    return rep
