import pytest

from hypercount.counting import BoxSpec, count_affine, count_projective
from hypercount.geometry import SMOOTH, Hypersurface
from hypercount.poly import UnimodularMatrix, parse_poly
from hypercount.slicer import (
    SearchExhausted,
    affine_chart,
    candidate_matrices,
    partition_check,
    recursive_count,
    search_slicing_matrix,
    slice_poly,
    slice_scan,
)


def A(text, n):
    return Hypersurface.affine_from(parse_poly(text), n)


def Pj(text, n):
    return Hypersurface.projective_from(parse_poly(text), n)


FERMAT_A4 = A("x1^6+x2^6+x3^6+x4^6+1", 4)
FERMAT_P4 = Pj("x0^6+x1^6+x2^6+x3^6+x4^6", 4)
QUARTIC_P4 = Pj("x0^4+x1^4+x2^4+x3^4-x4^4", 4)


def test_slice_poly():
    assert slice_poly(FERMAT_A4.poly, 4, 2) == parse_poly("x1^6+x2^6+x3^6+65", nvars=4)


def test_fermat_slices_all_good():
    scan = slice_scan(FERMAT_A4, 4, (-10, 10))
    assert scan.bad == []
    assert all(o.degree == 6 and o.status == SMOOTH for o in scan.outcomes)


def test_slice_scan_linear_twist():
    scan = slice_scan(A("x1^6+x2^6+x3^6+x4*x1", 4), 4, (-3, 3))
    assert all(o.degree == 6 for o in scan.outcomes)
    # at b = 0 the closure x1^6+x2^6+x3^6 is a cone: not certified
    assert scan.bad == [0] and scan.unresolved == [0] and scan.proven_bad == []


def test_degree_drop_detected():
    scan = slice_scan(A("x4*x1^5+x2", 4), 4, (-2, 2))
    assert 0 in scan.bad and 0 in scan.proven_bad
    assert next(o for o in scan.outcomes if o.b == 0).degree == 1


def test_bad_set_monotone():
    Y = affine_chart(QUARTIC_P4)
    small = set(slice_scan(Y, 4, (-1, 1)).bad)
    big = set(slice_scan(Y, 4, (-3, 3)).bad)
    assert small <= big and big == {-1, 1}


def test_certified_slices_keep_degree():
    for X in (FERMAT_P4, QUARTIC_P4):
        scan = slice_scan(affine_chart(X), 4, (-4, 4))
        for o in scan.outcomes:
            if o.status == SMOOTH:
                assert o.degree == X.degree


def test_candidate_order():
    cands = list(candidate_matrices(3, 1))
    assert cands[0] == UnimodularMatrix.identity(3)
    assert cands[1] == UnimodularMatrix.elementary(3, 0, 1, 1)
    assert cands[2] == UnimodularMatrix.elementary(3, 0, 1, -1)
    assert len(set(cands)) == len(cands)
    assert all(M.entry_bound <= 2 for M in cands)
    assert list(candidate_matrices(3, 0)) == [UnimodularMatrix.identity(3)]


def test_search_identity_suffices_for_fermat():
    M, scan = search_slicing_matrix(FERMAT_P4, 1, (-10, 10))
    assert M == UnimodularMatrix.identity(5) and scan.bad == []


def test_search_finds_shear_and_is_deterministic():
    M1, scan = search_slicing_matrix(QUARTIC_P4, 1, (-3, 3))
    M2, _ = search_slicing_matrix(QUARTIC_P4, 1, (-3, 3))
    assert M1 == M2 != UnimodularMatrix.identity(5)
    assert scan.bad == []
    with pytest.raises(SearchExhausted) as exc:
        search_slicing_matrix(QUARTIC_P4, 0, (-3, 3))
    assert exc.value.best == UnimodularMatrix.identity(5)
    assert exc.value.best_scan.bad == [-1, 1]


def test_search_requires_smooth_input():
    with pytest.raises(ValueError):
        search_slicing_matrix(Pj("x0^3+x1^2*x2", 2), 1, (-2, 2))


def test_recursive_affine_fermat():
    Y = A("x1^6+x2^6+x3^6+x4^6-x1^2*x2^4-1", 4)
    trace = recursive_count(Y, 8)
    assert trace.consistent
    assert trace.root.count == count_affine(Y, BoxSpec(8)).count
    assert len(trace.root.children) == 17


def test_recursive_projective_conic():
    X = Pj("x0^2+x1^2-2*x2^2", 2)
    for depth in (1, 2):
        trace = recursive_count(X, 2, depth)
        assert trace.consistent
        assert trace.root.count == count_projective(X, BoxSpec(2)).count
        assert len(set(trace.level_totals())) == 1


def test_recursive_depth_two_a5():
    Y = A("x1^2+x2^2-x3^2-x4*x5+x5^2-3", 5)
    trace = recursive_count(Y, 3, depth=2)
    assert trace.consistent
    totals = trace.level_totals()
    assert totals[0] == totals[1] == totals[2] == count_affine(Y, BoxSpec(3)).count


def test_recursive_depth_policy():
    with pytest.raises(ValueError):
        recursive_count(A("x1^2-x2", 2), 3, depth=3)
    with pytest.raises(ValueError):
        recursive_count(A("x1^2-x2", 2), 3, depth=0)


def test_recursive_projective_cubic_surface_depth_three():
    X = Pj("x0^3+x1^3+x2^3-x3^3", 3)
    trace = recursive_count(X, 3, depth=3)
    assert trace.consistent
    assert trace.root.count == count_projective(X, BoxSpec(3)).count


@pytest.mark.parametrize("text,n", [
    ("x1^2+x2^2-x3^2-7", 3),
    ("x1^6+x2^6+x3^6+x4^6+1", 4),
    ("x1*x2-x3", 3),
    ("x1^2+1", 2),
])
def test_partition_check(text, n):
    Y = A(text, n)
    for var in range(1, n + 1):
        assert partition_check(Y, 6, var)


def test_partition_check_truncated():
    Y = A("x1^2+x2^2-x3^2-7", 3)
    assert not partition_check(Y, 6, 3, brange=(0, 6))


def test_partition_check_projective():
    X = Pj("x0^2+x1^2-2*x2^2", 2)
    for var in range(3):
        assert partition_check(X, 5, var)
    assert not partition_check(X, 5, 0, brange=(2, 5))
