import math
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import PLAIN, SPHERE, expr_strategy, sphere_points, to_sympy
from magctl.expr import ConstraintViolation, DomainViolation, ExprError, Ring
from magctl.model import satellite_ring

SAT = satellite_ring()
q1, q2, q3, q4 = (SAT.var(v) for v in ("q1", "q2", "q3", "q4"))
exprs = expr_strategy(SPHERE)
many = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])


class TestExamples:
    def test_constrained_square_reduces(self):
        assert str(q4 * q4) == "-q1^2 - q2^2 - q3^2 + 1"

    def test_inverse_cancels(self):
        assert q4 * q4 ** -1 == SAT.one()

    def test_derivative_of_constrained(self):
        assert str(q4.diff("q1")) == "-q1*q4^-1"

    def test_product_rule_through_constraint(self):
        expected = q4 - q1 * q1 * q4 ** -1
        assert (q1 * q4).diff("q1") == expected

    def test_exact_evaluation_at_pythagorean_point(self):
        pt = [Fraction(3, 5), Fraction(0), Fraction(0)]
        assert (q4 ** -1).evaluate_exact([0, 0, 0, *pt], Fraction(4, 5)) == Fraction(5, 4)
        # 2*q1*q2 - 2*q3*q4 is b2 with beta = 1
        b2 = 2 * q1 * q2 - 2 * q3 * q4
        assert b2.evaluate_exact([0, 0, 0, Fraction(3, 5), Fraction(4, 5), 0], 0) == Fraction(24, 25)

    def test_float_matches_exact(self):
        e = 2 * q1 * q2 - 2 * q3 * q4
        pt = [0, 0, 0, Fraction(1, 3), Fraction(2, 3), Fraction(0)]
        c = Fraction(2, 3)
        assert e.evaluate_float([float(v) for v in pt]) == pytest.approx(float(e.evaluate_exact(pt, c)))

    def test_render(self):
        assert str(Fraction(1, 2) * q1 - 3) == "1/2*q1 - 3"
        assert str(SAT.zero()) == "0"

    def test_constraint_mismatch_rejected(self):
        with pytest.raises(ConstraintViolation):
            q4.evaluate_exact([0] * 6, Fraction(1, 2))

    def test_domain_violation_float(self):
        with pytest.raises(DomainViolation):
            q4.evaluate_float([0, 0, 0, 0.8, 0.7, 0.0])

    def test_zero_division_at_boundary(self):
        with pytest.raises(ZeroDivisionError):
            (q4 ** -1).evaluate_exact([0, 0, 0, 1, 0, 0], 0)

    def test_cannot_differentiate_constrained(self):
        with pytest.raises(ExprError):
            q1.diff("q4")

    def test_irrational_root_reported(self):
        with pytest.raises(ConstraintViolation):
            SAT.constrained_value([0, 0, 0, Fraction(1, 2), 0, 0])

    def test_inverse_of_general_expression_rejected(self):
        with pytest.raises(ExprError):
            (q1 + 1).inverse()

    def test_duplicate_names_rejected(self):
        with pytest.raises(ExprError):
            Ring(("x", "x"))


# ---------------------------------------------------------------------------
# ring axioms


@many
@given(exprs, exprs)
def test_addition_commutes(a, b):
    assert a + b == b + a


@many
@given(exprs, exprs, exprs)
def test_addition_associates(a, b, c):
    assert (a + b) + c == a + (b + c)


@many
@given(exprs, exprs)
def test_multiplication_commutes(a, b):
    assert a * b == b * a


@many
@given(exprs, exprs, exprs)
def test_multiplication_associates(a, b, c):
    assert (a * b) * c == a * (b * c)


@many
@given(exprs, exprs, exprs)
def test_distributive(a, b, c):
    assert a * (b + c) == a * b + a * c


@many
@given(exprs)
def test_identities_and_inverse(a):
    assert a + SPHERE.zero() == a
    assert a * SPHERE.one() == a
    assert (a - a).is_zero()
    assert a + (-a) == SPHERE.zero()


# ---------------------------------------------------------------------------
# derivation rule


@many
@given(exprs, exprs, st.sampled_from(("x", "y", "z")))
def test_leibniz_rule(a, b, v):
    assert (a * b).diff(v) == a.diff(v) * b + a * b.diff(v)


@many
@given(exprs, exprs, st.sampled_from(("x", "y", "z")))
def test_derivative_is_linear(a, b, v):
    assert (a + 3 * b).diff(v) == a.diff(v) + 3 * b.diff(v)


@settings(max_examples=200, deadline=None)
@given(exprs, st.sampled_from(("x", "y", "z")), st.sampled_from(("x", "y", "z")))
def test_mixed_partials_commute(a, u, v):
    assert a.diff(u).diff(v) == a.diff(v).diff(u)


# ---------------------------------------------------------------------------
# evaluation


@settings(max_examples=300, deadline=None)
@given(exprs, exprs, sphere_points())
def test_evaluation_is_a_ring_homomorphism(a, b, point):
    pt, c = point
    va, vb = a.evaluate_exact(pt, c), b.evaluate_exact(pt, c)
    assert (a + b).evaluate_exact(pt, c) == va + vb
    assert (a * b).evaluate_exact(pt, c) == va * vb


@settings(max_examples=300, deadline=None)
@given(exprs, sphere_points())
def test_float_and_exact_agree(a, point):
    pt, c = point
    exact = float(a.evaluate_exact(pt, c))
    approx = a.evaluate_float([float(v) for v in pt])
    assert math.isclose(approx, exact, rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(exprs, sphere_points())
def test_matches_sympy_with_square_root(a, point):
    pt, c = point
    xs = [sp.Rational(v.numerator, v.denominator) for v in pt]
    # sympy takes the square root itself
    ref = to_sympy(a, xs, sp.sqrt(1 - xs[0] ** 2 - xs[1] ** 2 - xs[2] ** 2))
    assert ref == sp.Rational(*a.evaluate_exact(pt, c).as_integer_ratio())


@settings(max_examples=150, deadline=None)
@given(exprs, st.sampled_from((0, 1, 2)), sphere_points())
def test_derivative_matches_sympy(a, i, point):
    pt, c = point
    xs = sp.symbols("x y z")
    cs = sp.sqrt(1 - xs[0] ** 2 - xs[1] ** 2 - xs[2] ** 2)
    ref = sp.diff(to_sympy(a, xs, cs), xs[i])
    ref = ref.subs({s: sp.Rational(v.numerator, v.denominator) for s, v in zip(xs, pt)})
    got = a.diff(i).evaluate_exact(pt, c)
    assert sp.simplify(ref - sp.Rational(got.numerator, got.denominator)) == 0


@settings(max_examples=300, deadline=None)
@given(expr_strategy(PLAIN), expr_strategy(PLAIN))
def test_plain_ring_equality_is_polynomial_identity(a, b):
    xs = sp.symbols("x y z")
    same = sp.expand(to_sympy(a, xs, 1) - to_sympy(b, xs, 1)) == 0
    assert (a == b) == same


@many
@given(exprs)
def test_terms_rebuild_the_same_expression(a):
    rebuilt = SPHERE.zero()
    for coeff, exps, ce in a.terms():
        rebuilt = rebuilt + SPHERE.monomial(coeff, exps, ce)
    assert rebuilt == a
    assert str(rebuilt) == str(a)
