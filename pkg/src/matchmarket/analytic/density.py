"""Recover a polynomial density on a bounded interval from its moments."""

from __future__ import annotations

from fractions import Fraction

from ..errors import DegenerateMomentsError, InsufficientDegreeError
from .poly import Poly, as_fraction
from .recursion import PolyDensity

#: held-out moments must match to this relative precision
RESIDUAL_TOL = 1e-9


def _solve(M, rhs):
    """Gauss-Jordan elimination over the rationals; ``None`` if singular."""
    n = len(rhs)
    aug = [list(row) + [v] for row, v in zip(M, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [row[-1] for row in aug]


def _box_moment(lo, hi, k):
    return (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)


def reconstruct_density(moments, support, degree):
    """Degree-``degree`` polynomial on ``support`` matching the first
    ``degree + 1`` moments. Remaining moments are held out and checked.

    Returns a :class:`PolyDensity`; the relative residuals of the held-out
    moments are attached as ``residuals``.
    """
    moments = [as_fraction(m) for m in moments]
    if degree < 0:
        raise InsufficientDegreeError("degree must be >= 0")
    if len(moments) < degree + 1:
        raise DegenerateMomentsError(
            f"degree {degree} needs {degree + 1} moments, got {len(moments)}")
    lo, hi = (as_fraction(v) for v in support)
    if not hi > lo:
        raise DegenerateMomentsError(f"empty support [{lo}, {hi}]")
    if moments[0] <= 0:
        raise DegenerateMomentsError("zeroth moment must be positive")
    M = [[_box_moment(lo, hi, n + k) for k in range(degree + 1)] for n in range(degree + 1)]
    coeffs = _solve(M, moments[: degree + 1])
    if coeffs is None:
        raise DegenerateMomentsError("singular moment system")
    poly = Poly(coeffs)
    residuals = []
    for n in range(degree + 1, len(moments)):
        got = (poly * Poly.monomial(n)).integrate(lo, hi)
        want = moments[n]
        scale = abs(want) if want != 0 else Fraction(1)
        residuals.append(abs(got - want) / scale)
    worst = max(residuals, default=Fraction(0))
    if worst > RESIDUAL_TOL:
        raise InsufficientDegreeError(
            f"held-out moment residual {float(worst):.3g} exceeds {RESIDUAL_TOL:g} at degree {degree}")
    return PolyDensity((lo, hi), poly, tuple(residuals))


def reconstruct_auto(moments, support, start_degree=0):
    """Raise the degree from ``start_degree`` until the held-out check passes.

    At least one moment is always held out.
    """
    last = None
    for degree in range(start_degree, len(moments) - 1):
        try:
            return reconstruct_density(moments, support, degree)
        except InsufficientDegreeError as exc:
            last = exc
    raise last or InsufficientDegreeError("not enough moments to hold one out")
