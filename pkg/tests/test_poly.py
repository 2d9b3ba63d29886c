from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from matchmarket.analytic import Poly, as_fraction

x = sp.Symbol("x")
fracs = st.fractions(min_value=-20, max_value=20, max_denominator=50)
polys = st.lists(fracs, max_size=6).map(Poly)


def to_sympy(p):
    return sum((sp.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(p.coeffs)),
               sp.Integer(0))


def from_sympy(expr):
    coeffs = sp.Poly(sp.expand(expr), x).all_coeffs()[::-1] if expr != 0 else []
    return Poly([Fraction(int(c.p), int(c.q)) for c in coeffs])


def test_as_fraction():
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction(3) == Fraction(3)
    assert as_fraction(Fraction(2, 7)) == Fraction(2, 7)


def test_trailing_zeros_trimmed():
    assert Poly([1, 2, 0, 0]).degree == 1
    assert Poly().degree == -1
    assert Poly([0]) == 0


@settings(max_examples=80, deadline=None)
@given(polys, polys)
def test_arithmetic_against_sympy(p, q):
    P, Q = to_sympy(p), to_sympy(q)
    assert from_sympy(P + Q) == p + q
    assert from_sympy(P - Q) == p - q
    assert from_sympy(P * Q) == p * q


@settings(max_examples=60, deadline=None)
@given(polys, fracs, fracs)
def test_integrals_against_sympy(p, a, b):
    want = sp.integrate(to_sympy(p), (x, sp.Rational(a.numerator, a.denominator),
                                      sp.Rational(b.numerator, b.denominator)))
    assert p.integrate(a, b) == Fraction(int(want.p), int(want.q))


@settings(max_examples=50, deadline=None)
@given(polys, fracs, fracs.filter(lambda s: s != 0))
def test_shift_scale_against_sympy(p, shift, scale):
    s = sp.Rational(scale.numerator, scale.denominator)
    t = sp.Rational(shift.numerator, shift.denominator)
    assert from_sympy(to_sympy(p).subs(x, s * x + t)) == p.shift_scale(scale, shift)


@settings(max_examples=50, deadline=None)
@given(polys, fracs)
def test_evaluation_exact_and_float(p, v):
    assert p(v) == Fraction(*sp.fraction(to_sympy(p).subs(x, sp.Rational(v.numerator, v.denominator))))
    assert p(float(v)) == pytest.approx(float(p(v)), rel=1e-9, abs=1e-9)


def test_cumulative_and_tail():
    p = Poly([1, 2, 3])
    assert p.cumulative(0)(1) == p.integrate(0, 1)
    assert p.tail(2)(1) == p.integrate(1, 2)
    assert (p.cumulative(-1) + p.tail(1))(Fraction(1, 3)) == p.integrate(-1, 1)


def test_moments_and_dot_moments():
    # uniform density 1/4 on [-2, 2]
    m = Poly([Fraction(1, 4)]).moments(-2, 2, 4)
    assert m == [1, 0, Fraction(4, 3), 0, Fraction(16, 5)]
    e = Poly([1, 0, 3]).dot_moments(m)  # E[1 + 3 U^2]
    assert e == 5
    with pytest.raises(ValueError):
        Poly([0, 0, 0, 0, 0, 0, 1]).dot_moments(m)


def test_power_and_cleared():
    p = Poly([Fraction(1, 2), Fraction(1, 3)])
    assert p ** 0 == 1
    assert p ** 3 == p * p * p
    ints, den = p.cleared()
    assert (ints, den) == ([3, 2], 6)
