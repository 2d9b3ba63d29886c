"""Polynomials with exact rational coefficients (constant term first)."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


def as_fraction(x):
    """Exact conversion; floats go through their shortest repr (0.1 -> 1/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


class Poly:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = [as_fraction(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def const(cls, value):
        return cls([value])

    @classmethod
    def x(cls):
        return cls([0, 1])

    @classmethod
    def monomial(cls, n, coeff=1):
        return cls([0] * n + [coeff])

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __repr__(self):
        return f"Poly({[str(c) for c in self.coeffs]})"

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def _coerce(self, other):
        return other if isinstance(other, Poly) else Poly.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return Poly([x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            f = as_fraction(other)
            return Poly([c * f for c in self.coeffs])
        if not self.coeffs or not other.coeffs:
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        f = as_fraction(scalar)
        return Poly([c / f for c in self.coeffs])

    def __pow__(self, n):
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, x):
        acc = Fraction(0) if isinstance(x, Rational) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + (c if isinstance(x, Rational) else float(c))
        return acc

    def antiderivative(self):
        return Poly([0] + [c / (i + 1) for i, c in enumerate(self.coeffs)])

    def integrate(self, a, b):
        P = self.antiderivative()
        return P(as_fraction(b)) - P(as_fraction(a))

    def cumulative(self, a):
        """``x -> integral of self from a to x``."""
        P = self.antiderivative()
        return P - P(as_fraction(a))

    def tail(self, b):
        """``x -> integral of self from x to b``."""
        P = self.antiderivative()
        return P(as_fraction(b)) - P

    def dot_moments(self, moments):
        """``sum_i c_i m_i``: the expectation of this polynomial given raw moments."""
        if len(moments) < len(self.coeffs):
            raise ValueError(f"need {len(self.coeffs)} moments, have {len(moments)}")
        return sum((c * m for c, m in zip(self.coeffs, moments)), Fraction(0))

    def moments(self, a, b, n_max):
        """``[integral of x^n self(x) dx over [a, b] for n = 0..n_max]``."""
        return [(self * Poly.monomial(n)).integrate(a, b) for n in range(n_max + 1)]

    def shift_scale(self, scale, shift):
        """``x -> self(scale * x + shift)``."""
        inner = Poly([shift, scale])
        out = Poly()
        for c in reversed(self.coeffs):
            out = out * inner + c
        return out

    def cleared(self):
        """``(integer coefficients, common denominator)``."""
        from math import lcm

        den = 1
        for c in self.coeffs:
            den = lcm(den, c.denominator)
        return [int(c * den) for c in self.coeffs], den
