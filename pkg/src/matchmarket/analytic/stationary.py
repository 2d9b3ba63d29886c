"""Long-run law of married agents' utilities under a fixed threshold.

An agent stops once its utility exceeds ``lam``. One that starts (at its
self-utility ``x``) below the threshold climbs through ever better partners
and stops at a draw from ``p_A`` conditioned above ``lam``; one that starts
above it stops at its first improvement, a draw conditioned above ``x``::

    p(u) = p_A(u) [ int_lam^u p0(x) / S_A(x) dx + P0(< lam) / S_A(lam) ],  u > lam

with ``S_A`` the survival function of ``p_A``. When ``p0 == p_A`` the
integral is ``ln(S_A(lam) / S_A(u))``.

Moments avoid the logarithmic end-point singularity by exchanging the
order of integration::

    E[U^n] = int_lam p0(x) E[A^n | A > x] dx + P0(< lam) E[A^n | A > lam]

For the Uniform model every piece is a polynomial integral, so the result
is an exact rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.integrate import cumulative_simpson

from ..errors import InvalidSpecError, NoMarriagePossibleError
from ..model import Family
from .poly import as_fraction


#: grid size of the tabulated climb integral (generic models)
TABLE_POINTS = 20001


def _upper(spec):
    return spec.support[1] if spec.family is Family.UNIFORM else math.inf


def _resolve_lam(model, lam):
    if lam is None:
        lam = model.lam
    if lam is None or lam == math.inf:
        raise NoMarriagePossibleError("no marriage threshold")
    if not model.p_A.is_continuous:
        raise InvalidSpecError("stationary law needs a continuous affinity law")
    if lam >= _upper(model.p_A):
        raise NoMarriagePossibleError(
            f"threshold {lam} is not below the affinity upper bound {_upper(model.p_A)}")
    return lam


@dataclass(frozen=True)
class StationaryDensity:
    """Callable married-agent density for one ``(model, lam)``."""

    model: object
    lam: float

    @property
    def support(self):
        lo = max(self.lam, self.model.p_A.support[0])
        return lo, _upper(self.model.p_A)

    def _climb_table(self):
        # int_lam^v p0(x) / S_A(x) dx tabulated once; constant past p0's support
        table = self.__dict__.get("_table")
        if table is None:
            A = self.model.p_A.frozen()
            p0 = self.model.p0_diag
            lo0, hi0 = p0.support
            if p0.family is Family.GAUSSIAN:
                lo0, hi0 = p0.mu - 12 * p0.sigma, p0.mu + 12 * p0.sigma
            a = max(self.lam, lo0)
            b = max(a, min(hi0, _upper(self.model.p_A)))
            x = np.linspace(a, b, TABLE_POINTS)
            with np.errstate(over="ignore"):
                f = np.exp(p0.frozen().logpdf(x) - A.logsf(x))
            if math.isfinite(_upper(self.model.p_A)) and b == _upper(self.model.p_A):
                f[-1] = f[-2]  # integrable end-point singularity
            table = (x, cumulative_simpson(f, x=x, initial=0.0))
            object.__setattr__(self, "_table", table)
        return table

    def _weights(self, u):
        A = self.model.p_A.frozen()
        p0 = self.model.p0_diag
        lam = self.lam
        if p0 == self.model.p_A:
            climb = A.logsf(lam) - A.logsf(u)
        else:
            x, cum = self._climb_table()
            climb = np.interp(u, x, cum, left=0.0, right=cum[-1])
        start = p0.frozen().cdf(lam) / A.sf(lam)
        return climb + start

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        A = self.model.p_A.frozen()
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = A.pdf(u) * self._weights(np.where(u > self.lam, u, self.lam))
        # theta(0) = 0: nobody stops exactly at the threshold
        vals = np.where(u > self.lam, vals, 0.0)
        hi = _upper(self.model.p_A)
        vals = np.where(u == hi, np.inf, vals) if math.isfinite(hi) else vals
        vals = np.where(u > hi, 0.0, vals)
        return vals if vals.ndim else float(vals)

    def integral(self):
        lo, hi = self.support
        return integrate.quad(self, lo, hi, limit=200)[0]

    def moment(self, n):
        """Direct quadrature of ``u^n p(u)`` (cross-check for
        :func:`stationary_moment`)."""
        lo, hi = self.support
        return integrate.quad(lambda u: u**n * self(u), lo, hi, limit=200)[0]


def stationary_married_density(model, lam=None):
    return StationaryDensity(model, _resolve_lam(model, lam))


def _uniform_exact(model):
    a, d = model.p_A, model.p0_diag
    return (a.family is Family.UNIFORM and d.family is Family.UNIFORM
            and a.sigma > 0 and (a.mu, a.sigma) == (d.mu, d.sigma))


def _uniform_moment(n, lam, mu, sigma):
    """Exact ``E[U^n]`` for Uniform ``[mu - 2 sigma, mu + 2 sigma]``."""
    h = 2 * sigma
    lam = max(lam - mu, -h)  # below the support every first partner is accepted
    d = h - lam
    total = Fraction(0)
    for k in range(n + 1):
        # int_lam^h v^k ln(d / (h - v)) dv via w = h - v and
        # int_0^d w^j ln(d / w) dw = d^(j+1) / (j+1)^2
        climb = sum(math.comb(k, j) * h ** (k - j) * (-1) ** j * d ** (j + 1) / Fraction((j + 1) ** 2)
                    for j in range(k + 1))
        start = (lam + h) / d * (h ** (k + 1) - lam ** (k + 1)) / (k + 1)
        total += math.comb(n, k) * mu ** (n - k) * (climb + start)
    return total / (2 * h)


def conditional_tail_moment(spec, n, x):
    """``E[A^n | A > x]`` for a continuous affinity law."""
    if spec.family is Family.GAUSSIAN:
        z = (x - spec.mu) / spec.sigma
        N = spec.frozen()
        # inverse Mills ratio, stable far in the tail
        r = math.exp(float(N.logpdf(x) + math.log(spec.sigma) - N.logsf(x)))
        K = [1.0, r]
        for k in range(2, n + 1):
            K.append(z ** (k - 1) * r + (k - 1) * K[k - 2])
        return sum(math.comb(n, k) * spec.mu ** (n - k) * spec.sigma**k * K[k]
                   for k in range(n + 1))
    if spec.family is Family.UNIFORM:
        lo, hi = spec.support
        x = max(x, lo)
        if x >= hi:
            return hi**n
        return (hi ** (n + 1) - x ** (n + 1)) / ((n + 1) * (hi - x))
    raise InvalidSpecError(f"no tail moments for {spec.family.value}")


def stationary_moment(n, lam=None, model=None):
    """``E[U^n]`` of married agents in the long run.

    Exact :class:`~fractions.Fraction` for the Uniform model with a common
    affinity and self-utility law, quadrature otherwise.
    """
    if n < 0:
        raise InvalidSpecError("n must be >= 0")
    lam = _resolve_lam(model, lam)
    if _uniform_exact(model):
        s = model.p_A
        return _uniform_moment(n, as_fraction(lam), as_fraction(s.mu), as_fraction(s.sigma))
    P0 = model.p0_diag
    lo_A = model.p_A.support[0]
    lam_eff = max(lam, lo_A)

    def cond(x):
        return conditional_tail_moment(model.p_A, n, x)

    P0f = P0.frozen() if P0.is_continuous else None
    if P0f is None:
        # point-mass self-utility: a single climb start
        x0 = P0.mu
        if x0 > lam:
            return cond(x0)
        return cond(lam_eff)
    p_below = P0f.cdf(lam)
    lo0, hi0 = P0.support
    hi = min(hi0, _upper(model.p_A))
    if P0.family is Family.GAUSSIAN:
        hi = min(hi, P0.mu + 12 * P0.sigma)
    start = max(lam, lo0)
    climb = 0.0
    if hi > start:
        climb = integrate.quad(lambda x: P0f.pdf(x) * cond(x), start, hi, limit=200)[0]
    return climb + p_below * cond(lam_eff)


def published_stationary_moment(n, lam, sigma):
    """The harmonic-number closed form as it appears in the literature for the
    Uniform model (``mu = 0``).

    Kept for comparison only: its second term is twice the moment of the
    stationary density, so it is not normalized (``n = 0`` gives
    ``3/2 + lam/(4 sigma)``) and agrees with :func:`stationary_moment`
    only at ``lam = -2 sigma``.
    """
    lam, sigma = as_fraction(lam), as_fraction(sigma)
    h = 2 * sigma
    x = lam / h
    # ln(1 - x) + B_x(n + 2, 0) = -sum_{k=1}^{n+1} x^k / k exactly
    harmonic = sum(Fraction(1, k) for k in range(1, n + 2))
    log_beta = -sum(x**k / k for k in range(1, n + 2))
    first = h**n / (2 * (n + 1)) * (harmonic + log_beta)
    second = (lam + h) / (h - lam) * (h ** (n + 1) - lam ** (n + 1)) / (h * (n + 1))
    return first + second
