import itertools
import random

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from hypercount.finite_field import GF, projective_point_count, projective_points
from hypercount.geometry import (
    INDETERMINATE,
    SINGULAR,
    SMOOTH,
    Hypersurface,
    certify_smooth_over_Q,
    detect_split_shape,
    essential_variable_count,
    exponent_table,
    is_smooth_mod_p,
    nonsingular_primes,
    theta,
    theta_float,
    verify_witness,
)
from hypercount.poly import SparsePoly, UnimodularMatrix, apply_unimodular, eval_mod, parse_poly, partial

FERMAT = Hypersurface.projective_from(parse_poly("x0^6+x1^6+x2^6+x3^6+x4^6"))
CUSP = Hypersurface.projective_from(parse_poly("x0^3+x1^2*x2"))


def P(text, n=None):
    return Hypersurface.projective_from(parse_poly(text), n)


# -- hypersurfaces -----------------------------------------------------------

def test_hypersurface_invariants():
    with pytest.raises(ValueError):
        P("x0^2 + x1")
    with pytest.raises(ValueError):
        Hypersurface.affine_from(parse_poly("7", nvars=3))
    with pytest.raises(ValueError):
        Hypersurface.affine_from(parse_poly("x0 + x1"))
    Y = Hypersurface.affine_from(parse_poly("x1^2 + 5"), 1)
    assert Y.closure().poly == parse_poly("x1^2 + 5*x0^2") and Y.degree == 2


# -- theta and exponents -----------------------------------------------------

def test_theta_bands():
    d = sympy.Integer
    assert theta(50) == 0 and theta(125) == 0
    assert sympy.simplify(theta(20) - (sympy.Rational(11, 4) / sympy.cbrt(d(20)) - sympy.Rational(3, 4))) == 0
    assert sympy.simplify(theta(6) - 2 / sympy.sqrt(6)) == 0
    assert abs(theta_float(6) - 0.816496580927726) < 1e-12
    assert abs(theta_float(20) - 0.263108662126106) < 1e-12
    with pytest.raises(ValueError):
        theta(5)


def test_theta_monotone_and_bounded():
    values = [theta_float(d) for d in range(6, 201)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert all(0 <= v < 1 for v in values)


def test_exponent_table_examples():
    t = exponent_table(5, 50)
    assert t.main_bound == 3 and t.dim_growth == 4
    assert exponent_table(4, 64).p4_bound == 2
    assert abs(exponent_table(4, 6).p4_bound - (2 + 45 / (16 * 6 ** 0.5) - 0.75)) < 1e-12
    assert exponent_table(4, 5).theta is None


# -- finite fields -----------------------------------------------------------

@pytest.mark.parametrize("p,k", [(2, 2), (3, 2), (5, 2), (2, 3), (7, 1)])
def test_gf_is_a_field(p, k):
    F = GF(p, k)
    q = p ** k
    elems = np.arange(q)
    assert sorted(F.exp[: q - 1].tolist()) == list(range(1, q))
    a, b, c = (np.array(random.Random(p * k + i).choices(range(q), k=200)) for i in range(3))
    assert (F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)).all()
    assert (F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))).all()
    assert (F.power(elems, q) == elems).all()  # Frobenius fixes F_q


def test_projective_points_enumeration():
    pts = np.concatenate(list(projective_points(3, 3)))
    assert len(pts) == projective_point_count(3, 3) == 13
    assert len({tuple(r) for r in pts}) == 13


# -- smoothness --------------------------------------------------------------

def test_fermat_smoothness():
    v = is_smooth_mod_p(FERMAT, 5)
    assert v.status == SMOOTH and v.certifying_prime == 5
    for p in (2, 3):
        assert is_smooth_mod_p(FERMAT, p).status == SINGULAR
    assert certify_smooth_over_Q(FERMAT, [5, 7, 11]).certifying_prime == 5


def test_cusp_witness():
    for p in (5, 7, 11):
        v = is_smooth_mod_p(CUSP, p)
        assert v.status == SINGULAR
        assert v.witness == (0, 0, 1)
        assert verify_witness(CUSP, v)


def test_reducible_quadric_never_smooth():
    X = P("x0*x1", 2)
    for p in (2, 3, 5, 7):
        v = is_smooth_mod_p(X, p)
        assert v.status == SINGULAR and verify_witness(X, v)
    assert certify_smooth_over_Q(X, [3, 5, 7]).status == INDETERMINATE


def test_input_validation():
    with pytest.raises(ValueError):
        is_smooth_mod_p(FERMAT, 4)
    with pytest.raises(ValueError):
        is_smooth_mod_p(FERMAT, 5, kmax=0)
    with pytest.raises(ValueError):
        certify_smooth_over_Q(FERMAT, [])


def test_nonsingular_primes_examples():
    assert nonsingular_primes(FERMAT, 20) == [5, 7, 11, 13, 17, 19]
    assert nonsingular_primes(P("x0^2+x1^2+x2^2"), 10) == [3, 5, 7]
    assert nonsingular_primes(FERMAT, 1) == []


def test_plane_forms_smooth():
    literal = P("x0^7 + x0*x5^6 + x1^7 + x1*x4^6 + x2^7 + x2*x3^6")
    v = certify_smooth_over_Q(literal)
    assert v.status == SMOOTH and v.certifying_prime <= 50
    sextic = P("x0^6 + x0*x5^5 + x1^6 + x1*x4^5 + x2^6 + x2*x3^5")
    assert certify_smooth_over_Q(sextic).status == SMOOTH


def _scan_singular(F: SparsePoly, p: int):
    polys = [F] + [partial(F, i) for i in range(F.nvars)]
    for pt in itertools.product(range(p), repeat=F.nvars):
        if any(pt) and all(eval_mod(g, pt, p) == 0 for g in polys):
            return pt
    return None


@st.composite
def ternary_forms(draw):
    d = draw(st.integers(2, 4))
    monos = [e for e in itertools.product(range(d + 1), repeat=3) if sum(e) == d]
    chosen = draw(st.lists(st.sampled_from(monos), min_size=1, max_size=6, unique=True))
    terms = {m: draw(st.integers(-3, 3).filter(bool)) for m in chosen}
    return SparsePoly(terms, 3)


@settings(max_examples=40, deadline=None)
@given(ternary_forms(), st.sampled_from([3, 5, 7]))
def test_verdicts_agree_with_exhaustive_scan(F, p):
    if F.total_degree() < 1:
        return
    X = Hypersurface.projective_from(F)
    v = is_smooth_mod_p(X, p, kmax=1)
    witness = _scan_singular(F, p)
    if v.status == SMOOTH:
        assert witness is None
    if v.status == SINGULAR and v.witness is not None:
        assert verify_witness(X, v)
    if witness is not None:
        assert v.status != SMOOTH


def test_certificates_monotone_in_kmax():
    for p in nonsingular_primes(FERMAT, 13, kmax=1):
        assert is_smooth_mod_p(FERMAT, p, kmax=2).status == SMOOTH


# -- cylindricity and split shape -------------------------------------------

def test_essential_variable_examples():
    assert essential_variable_count(parse_poly("x1^2+x2^2", nvars=4)) == 2
    assert essential_variable_count(parse_poly("x1^2+2*x1*x2+x2^2")) == 1
    rng = random.Random(3)
    monos = [e for e in itertools.product(range(4), repeat=3) if sum(e) <= 3]
    dense = SparsePoly({(0,) + m: rng.randint(1, 9) for m in monos}, 4)
    assert essential_variable_count(dense) == 3


def test_essential_variables_invariant_under_unimodular():
    rng = random.Random(50)
    for _ in range(50):
        nv = 4
        f = SparsePoly({tuple(rng.randint(0, 2) for _ in range(nv)): rng.randint(-5, 5) for _ in range(4)}, nv)
        if f.is_zero() or f.total_degree() < 1:
            continue
        A = UnimodularMatrix.identity(nv)
        for _ in range(3):
            i, j = rng.sample(range(nv), 2)
            A = A @ UnimodularMatrix.elementary(nv, i, j, rng.randint(-2, 2))
        assert essential_variable_count(apply_unimodular(f, A)) == essential_variable_count(f)


def test_split_shape_examples():
    f = parse_poly("x1^6+x2^6+1+x3*x4^5")
    s = detect_split_shape(f)
    assert s.f0 == parse_poly("x1^6+x2^6+1", nvars=5) and s.g == parse_poly("x4^5", nvars=5)
    assert detect_split_shape(parse_poly("x1*x4")) is None
    s = detect_split_shape(parse_poly("x3*x4^2 + x3^2*x1"))
    assert s.degenerate and s.f0.is_zero()


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.tuples(st.just(0), *[st.integers(0, 3)] * 4), st.integers(-5, 5), max_size=6))
def test_split_shape_reconstructs(terms):
    f = SparsePoly(terms, 5)
    if f.is_zero():
        return
    s = detect_split_shape(f)
    if s is not None:
        assert s.f0 + SparsePoly.var(3, 5) * s.g == f
