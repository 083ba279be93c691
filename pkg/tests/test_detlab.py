import itertools
import math

import pytest

from hypercount.counting import BoxSpec, CongruenceClass, list_points
from hypercount.detlab import (
    AuxiliaryNotFound,
    IntersectionLedger,
    PlanError,
    PrimePlan,
    compute_K,
    covering_report,
    find_auxiliary,
    gather_class_points,
    select_primes,
)
from hypercount.geometry import Hypersurface
from hypercount.poly import divides, eval_poly, parse_poly

QUARTIC = Hypersurface.affine_from(parse_poly("x1^4+x2^4+x3^4-x4^4-1"), 4)
FERMAT_SLICE = Hypersurface.affine_from(parse_poly("x1^6+x2^6+x3^6+x4^6+1"), 4)
CIRCLE = parse_poly("x1^2+x2^2-25")
CIRCLE_PTS = [x for x in itertools.product(range(-5, 6), repeat=2) if x[0] ** 2 + x[1] ** 2 == 25]


def test_compute_K_examples():
    assert abs(compute_K(64, 8, 0) - 8) < 1e-12
    assert abs(compute_K(2, 2, 0) - 2 ** (2 ** (-1 / 3))) < 1e-12
    assert abs(compute_K(2, 2, 0) - 1.7333) < 1e-3
    B = 1000
    assert abs(math.log(compute_K(B, 10**9, 1)) / math.log(B) - 1) < 0.01
    with pytest.raises(ValueError):
        compute_K(1, 2, 0)


def test_select_primes_fermat_slice():
    plan = select_primes(FERMAT_SLICE, 1096, 5)
    assert plan.primes[0] == 7 and 5 not in plan.primes
    assert plan.K / plan.modulus <= plan.constants.C4
    assert plan.violations() == []


def test_select_primes_errors():
    with pytest.raises(PlanError):
        select_primes(FERMAT_SLICE, 2, 5)
    with pytest.raises(PlanError):
        select_primes(FERMAT_SLICE, 1096, 3)  # 3 divides 6: singular reduction
    with pytest.raises(PlanError):
        select_primes(FERMAT_SLICE, 1096, 4)


def test_plan_never_contains_r():
    for r in (5, 7, 11, 13):
        plan = select_primes(QUARTIC, 200, r, eps=0.2)
        assert r not in plan.primes
        assert len(set(plan.primes)) == len(plan.primes)


def test_gather_examples():
    Y = Hypersurface.affine_from(parse_poly("x1+x2+x3+x4"), 4)
    assert gather_class_points(Y, 3, CongruenceClass(7, (1, 1, 1, 4))) == [(1, 1, 1, -3)]
    Y2 = Hypersurface.affine_from(parse_poly("x1^2+x2^2-x3^2-x4^2"), 4)
    assert gather_class_points(Y2, 3, CongruenceClass(11, (0, 0, 0, 0))) == [(0, 0, 0, 0)]
    assert gather_class_points(Y, 3, CongruenceClass(7, (1, 1, 1, 1))) == []


def test_find_auxiliary_examples():
    pts = [(1, 2, 0, 3), (0, 0, 1, 3), (5, 1, 2, 3), (2, 2, 2, 3), (7, 1, 0, 3)]
    cert = find_auxiliary(QUARTIC.poly, pts, 2)
    assert cert.g == parse_poly("x4 - 3", nvars=5) and cert.D == 1
    cert = find_auxiliary(CIRCLE, [(3, 4), (3, -4), (3, 0)], 3)
    assert cert.g == parse_poly("x1 - 3", nvars=3) and cert.D == 1
    with pytest.raises(AuxiliaryNotFound):
        find_auxiliary(CIRCLE, CIRCLE_PTS, 2)
    # Bezout: a curve of degree D <= 5 meets the circle in 2D < 12 points unless it contains it
    cert = find_auxiliary(CIRCLE, CIRCLE_PTS, 8)
    assert cert.D == 6 and cert.verified


def test_find_auxiliary_vacuous():
    cert = find_auxiliary(CIRCLE, [], 3)
    assert cert.vacuous and cert.D == 0 and cert.g == parse_poly("1", nvars=3)
    with pytest.raises(ValueError):
        find_auxiliary(CIRCLE, CIRCLE_PTS, 0)


def test_certificate_soundness_and_minimality():
    for B, q, z in [(20, 5, (1, 0, 0, 1)), (20, 3, (0, 1, 0, 0)), (12, 2, (1, 0, 0, 0))]:
        pts = gather_class_points(QUARTIC, B, CongruenceClass(q, z))
        if not pts:
            continue
        cert = find_auxiliary(QUARTIC.poly, pts, 6)
        assert all(eval_poly(cert.g, (0,) + p) == 0 for p in pts)
        assert not divides(QUARTIC.poly, cert.g)
        if cert.D > 1:
            with pytest.raises(AuxiliaryNotFound):
                find_auxiliary(QUARTIC.poly, pts, cert.D - 1)


def test_ledger_arithmetic():
    plan = PrimePlan(5, (7, 11, 13), 1096, 6, 0.0, compute_K(1096, 6, 0))
    ledger = IntersectionLedger.build(plan)
    expected = [25 * 7, 25 * 7 * 11 * 7, 25 * 7 * 11 * 13 * 7 * 11]
    assert [r.degree_product for r in ledger.rows] == expected
    bounds = [r.curve_bound for r in ledger.rows]
    assert all(b > 0 for b in bounds) and bounds == sorted(bounds, reverse=True)
    assert all(abs(r.curve_bound - plan.K ** 2 / d) < 1e-9 for r, d in zip(ledger.rows, expected))


def test_covering_small():
    plan = PrimePlan(5, (3,), 10, 4, 0.4, compute_K(10, 4, 0.4))
    rep = covering_report(QUARTIC, 10, plan)
    pts, _ = list_points(QUARTIC, BoxSpec(10), cap=None)
    assert rep.points_total == len(pts) == rep.points_covered
    assert rep.all_verified and not rep.uncovered
    assert rep.total_classes >= len(rep.certificates)


def test_covering_rejects_bad_plan():
    plan = PrimePlan(5, (5,), 10, 4, 0.0, compute_K(10, 4, 0.0))
    with pytest.raises(PlanError):
        covering_report(QUARTIC, 10, plan)
