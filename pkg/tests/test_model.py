import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_params
from magctl.model import (P_STAR, InvalidParams, Params, build_system, diagnose_params,
                          equilibrium, magnetic_field, satellite_ring)

positive = st.builds(Fraction, st.integers(1, 30), st.integers(1, 6))
nonzero = st.builds(Fraction, st.integers(1, 9), st.integers(1, 4)).flatmap(
    lambda v: st.sampled_from((v, -v)))
params = st.builds(Params, positive, positive, positive, nonzero, nonzero)


def test_drift_vanishes_at_equilibrium_for_reference_parameters():
    sys = build_system(P_STAR)
    assert sys.eval_field_exact(sys.fields[0]) == (0,) * 6
    assert sys.equilibrium == (-1, 0, 0, 0, 0, 0)
    assert sys.equilibrium_c == 1


@settings(max_examples=40, deadline=None)
@given(params)
def test_drift_vanishes_at_equilibrium(p):
    sys = build_system(p)
    assert all(v == 0 for v in sys.eval_field_exact(sys.fields[0]))
    assert sys.equilibrium[0] == -p.omega0


@settings(max_examples=100, deadline=None)
@given(params, st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_field_strength_is_constant(p, a, b, c):
    # rational points on the unit 3-sphere from inverse stereographic projection
    a, b, c = Fraction(a, 7), Fraction(b, 7), Fraction(c, 7)
    s = a * a + b * b + c * c
    q = [2 * a / (1 + s), 2 * b / (1 + s), 2 * c / (1 + s)]
    q4 = abs(1 - s) / (1 + s)
    b1, b2, b3 = magnetic_field(p)
    pt = [0, 0, 0, *q]
    total = sum(e.evaluate_exact(pt, q4) ** 2 for e in (b1, b2, b3))
    assert total == p.beta ** 2


@settings(max_examples=30, deadline=None)
@given(params)
def test_field_strength_normalizes_to_constant(p):
    b1, b2, b3 = magnetic_field(p)
    total = b1 * b1 + b2 * b2 + b3 * b3
    assert total == total.ring.const(p.beta ** 2)


def test_control_fields_at_equilibrium():
    sys = build_system(P_STAR)
    f1, f2, f3 = (sys.eval_field_exact(f) for f in sys.fields[1:])
    assert f1 == (0,) * 6
    assert f2 == (0, 0, -1, 0, 0, 0)
    assert f3 == (0, Fraction(1, 2), 0, 0, 0, 0)


class TestParams:
    def test_parse(self):
        assert Params.parse("I1=4,I2=2,I3=1,omega0=1,beta=1") == P_STAR
        p = Params.parse("I1=3/2, I2=2, I3=1")
        assert p.I1 == Fraction(3, 2) and p.omega0 == 1 and p.beta == 1

    def test_str_round_trip(self):
        p = Params(Fraction(7, 3), 2, 5, Fraction(-1, 2), 3)
        assert Params.parse(str(p)) == p

    @pytest.mark.parametrize("text", [
        "I1=0,I2=2,I3=1", "I1=-1,I2=2,I3=1", "I1=4,I2=2,I3=1,omega0=0",
        "I1=4,I2=2,I3=1,beta=0", "I1=4,I2=2", "I1=4,I2=2,I3=x", "I1=4,I2=2,I3=1,I4=1",
        "I1=4,I2,I3=1", "I1=1/0,I2=2,I3=1",
    ])
    def test_invalid(self, text):
        with pytest.raises(InvalidParams):
            Params.parse(text)


class TestDiagnostics:
    def test_reference_is_nondegenerate(self):
        d = diagnose_params(P_STAR)
        assert not d.flat_body and not d.axisymmetric and d.nondegenerate
        assert d.triangle_violations == ["I1 > I2+I3"]

    def test_flat_body(self):
        d = diagnose_params(Params(3, 2, 1, 1, 1))
        assert d.flat_body and not d.axisymmetric and not d.nondegenerate
        assert d.triangle_violations == []

    def test_axisymmetric(self):
        d = diagnose_params(Params(3, 1, 1, 1, 1))
        assert d.axisymmetric and not d.flat_body

    @settings(max_examples=200, deadline=None)
    @given(params)
    def test_flags_match_definitions(self, p):
        d = diagnose_params(p)
        assert d.flat_body == (p.I1 == p.I2 + p.I3)
        assert d.axisymmetric == (p.I2 == p.I3)
        assert d.nondegenerate == (p.I1 != p.I2 + p.I3 and p.I2 != p.I3)


def test_equilibrium_and_ring():
    ring = satellite_ring()
    assert ring.names == ("w1", "w2", "w3", "q1", "q2", "q3")
    assert ring.constrained == "q4"
    assert equilibrium(Params(1, 1, 1, Fraction(-3, 2), 1))[0] == Fraction(3, 2)


def test_random_draws_are_admissible():
    rng = random.Random(5)
    for _ in range(50):
        p = random_params(rng)
        assert p.I1 > 0 and p.omega0 != 0 and p.beta != 0
