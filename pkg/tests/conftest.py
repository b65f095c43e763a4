"""Shared strategies and independent reference formulas."""
from __future__ import annotations

import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import strategies as st

from magctl.expr import Ring
from magctl.model import Params
from magctl.system import make_system

# ---------------------------------------------------------------------------
# small rings


def _sphere_ring(names=("x", "y", "z"), cname="c") -> Ring:
    free = Ring(names)
    rel = free.one()
    for v in names:
        rel = rel - free.var(v) * free.var(v)
    return Ring(names, cname, rel)


SPHERE = _sphere_ring()
PLAIN = Ring(("x", "y", "z"))

small_fraction = st.builds(
    Fraction, st.integers(-6, 6), st.integers(1, 4)
)


def expr_strategy(ring: Ring, max_terms: int = 4, max_exp: int = 2, c_range=(-2, 2)):
    """Sums of a few Laurent monomials, including negative powers of the constrained variable."""
    c_lo, c_hi = c_range if ring.constrained else (0, 0)
    monomial = st.builds(
        lambda coeff, exps, ce: ring.monomial(coeff, exps, ce),
        small_fraction,
        st.lists(st.integers(0, max_exp), min_size=ring.n, max_size=ring.n),
        st.integers(c_lo, c_hi),
    )

    def total(terms):
        out = ring.zero()
        for t in terms:
            out = out + t
        return out

    return st.lists(monomial, min_size=0, max_size=max_terms).map(total)


@st.composite
def sphere_points(draw):
    """Rational points with a rational constrained value ``c = sqrt(1 - |p|^2) > 0``.

    Inverse stereographic projection of a rational point maps onto the rational
    unit 3-sphere; the fourth coordinate is the constrained value up to sign.
    """
    a = [draw(small_fraction) / 3 for _ in range(3)]
    s = sum(v * v for v in a)
    if s == 1:
        s, a = Fraction(1, 4), [Fraction(1, 2), Fraction(0), Fraction(0)]
    pt = [2 * v / (1 + s) for v in a]
    c = abs((1 - s) / (1 + s))
    return pt, c


# ---------------------------------------------------------------------------
# sympy conversion (oracle side)


def to_sympy(e, symbols, c_value):
    """Sympy expression from the Laurent terms, substituting ``c_value`` for the constrained variable."""
    out = sp.Integer(0)
    for coeff, exps, ce in e.terms():
        t = sp.Rational(coeff.numerator, coeff.denominator)
        for s, k in zip(symbols, exps):
            t *= s**k
        if ce:
            t *= c_value**ce
        out += t
    return out


# ---------------------------------------------------------------------------
# parameter draws


def random_params(rng: random.Random, signed: bool = True) -> Params:
    """Admissible rational parameters; ``omega0`` and ``beta`` may be negative."""
    moments = [Fraction(rng.randint(1, 12), rng.randint(1, 5)) for _ in range(3)]
    sign = (lambda: rng.choice((-1, 1))) if signed else (lambda: 1)
    omega0 = sign() * Fraction(rng.randint(1, 7), rng.randint(1, 4))
    beta = sign() * Fraction(rng.randint(1, 7), rng.randint(1, 4))
    return Params(*moments, omega0, beta)


@pytest.fixture
def rng():
    return random.Random(20240611)


def closed_forms(p: Params) -> dict[str, tuple[Fraction, ...]]:
    """Equilibrium values of the reference brackets, written out by hand."""
    I1, I2, I3, w, b = p.I1, p.I2, p.I3, p.omega0, p.beta
    z = Fraction(0)

    def e(i, s):
        v = [z] * 6
        v[i] = Fraction(s)
        return tuple(v)

    return {
        "g1": e(0, 3 * w**2 * b**2 * (I1 - I2 - I3) * (I2 - I3) / (I1**2 * I2 * I3)),
        "g2": e(1, b / I2),
        "g3": e(2, -b / I3),
        "g4": e(3, b**2 * (I2 + I3 - I1) / (2 * I1 * I2 * I3)),
        "g5": (z, z, w * b * (I1 - I2) / (I2 * I3), z, -b / (2 * I2), z),
        "g6": (z, w * b * (I1 - I3) / (I2 * I3), z, z, z, b / (2 * I3)),
        "h1": e(3, -w * b**2 * (I1**2 - (I2 + 2 * I3) * I1 + 2 * I2 * I3 + I3**2)
                / (I1 * I2 * I3**2)),
        "h2": e(3, -w * b**2 * (I1**2 - (2 * I2 + I3) * I1 + I2 * (I2 + 2 * I3))
                / (I1 * I2**2 * I3)),
    }


def printed_linearization(p: Params):
    I1, I2, I3, w, b = p.I1, p.I2, p.I3, p.omega0, p.beta
    h, z = Fraction(1, 2), Fraction(0)
    A = [
        [z, z, z, 6 * w**2 * (I3 - I2) / I1, z, z],
        [z, z, (I1 - I3) / I2 * w, z, 6 * w**2 * (I3 - I1) / I2, z],
        [z, (I2 - I1) / I3 * w, z, z, z, z],
        [h, z, z, z, z, z],
        [z, h, z, z, z, -w],
        [z, z, h, z, w, z],
    ]
    B = [
        [z, z, z],
        [z, z, b / I2],
        [z, -b / I3, z],
        [z, z, z],
        [z, z, z],
        [z, z, z],
    ]
    return A, B


# ---------------------------------------------------------------------------
# sympy model of the satellite (written independently of magctl.model)

W1, W2, W3, Q1, Q2, Q3 = sp.symbols("w1 w2 w3 q1 q2 q3")
SAT_STATE = (W1, W2, W3, Q1, Q2, Q3)


def sympy_satellite(p: Params):
    I1, I2, I3, w0, b = (sp.Rational(v.numerator, v.denominator)
                         for v in (p.I1, p.I2, p.I3, p.omega0, p.beta))
    q4 = sp.sqrt(1 - Q1**2 - Q2**2 - Q3**2)
    f0 = sp.Matrix([
        (I2 - I3) / I1 * W2 * W3
        + 6 * w0**2 * (I2 - I3) / I1 * (Q1 * q4 + Q2 * Q3) * (2 * Q1**2 + 2 * Q2**2 - 1),
        (I3 - I1) / I2 * W1 * W3
        + 6 * w0**2 * (I3 - I1) / I2 * (Q1 * Q3 - Q2 * q4) * (2 * Q1**2 + 2 * Q2**2 - 1),
        (I1 - I2) / I3 * W1 * W2
        + 12 * w0**2 * (I1 - I2) / I3 * (Q1 * q4 + Q2 * Q3) * (Q2 * q4 - Q1 * Q3),
        sp.Rational(1, 2) * ((W1 + w0) * q4 - W2 * Q3 + W3 * Q2),
        sp.Rational(1, 2) * ((W1 - w0) * Q3 + W2 * q4 - W3 * Q1),
        sp.Rational(1, 2) * (-(W1 - w0) * Q2 + W2 * Q1 + W3 * q4),
    ])
    f1 = sp.Matrix([0, -2 * b * (Q1 * Q3 + Q2 * q4) / I2, 2 * b * (Q1 * Q2 - Q3 * q4) / I3, 0, 0, 0])
    f2 = sp.Matrix([2 * b * (Q1 * Q3 + Q2 * q4) / I1, 0, b * (2 * Q2**2 + 2 * Q3**2 - 1) / I3, 0, 0, 0])
    f3 = sp.Matrix([2 * b * (Q3 * q4 - Q1 * Q2) / I1, b * (1 - 2 * Q2**2 - 2 * Q3**2) / I2, 0, 0, 0, 0])
    return [f0, f1, f2, f3]


def sympy_bracket(f, g, state=SAT_STATE):
    X = sp.Matrix(state)
    return g.jacobian(X) * f - f.jacobian(X) * g


def sympy_tree(fields, tree, cache=None, state=SAT_STATE):
    from magctl.lie import Leaf

    cache = {} if cache is None else cache
    if tree.key in cache:
        return cache[tree.key]
    if isinstance(tree, Leaf):
        out = fields[tree.index]
    else:
        out = sympy_bracket(sympy_tree(fields, tree.left, cache, state),
                            sympy_tree(fields, tree.right, cache, state), state)
    cache[tree.key] = out
    return out


# ---------------------------------------------------------------------------
# random small systems


@st.composite
def small_systems(draw, ring: Ring = PLAIN, m_max: int = 2, max_terms: int = 3):
    m = draw(st.integers(1, m_max))
    fields = [tuple(draw(expr_strategy(ring, max_terms=max_terms, max_exp=2))
                    for _ in range(ring.n)) for _ in range(m + 1)]
    return make_system(ring, fields, (Fraction(0),) * ring.n, name="random")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
