"""Large-N evolution of the couple/single utility distributions.

At every step the population splits into a couple fraction ``b`` and a
single fraction ``r`` with utility laws ``C`` and ``S``. Two independent
routes advance them:

* the kernel route evaluates the expectations of the four transition
  kernels (couple/single, stay/switch) and returns ``b``, ``r`` and the
  moments of ``C``, ``S``, ``U``; it only needs moments of the previous step;
* the density route pushes the densities of ``C`` and ``S`` forward.

Both are written once against a small "ops" interface. With Uniform
affinities and self-utilities on a common support every density is a
polynomial, so :class:`_ExactOps` runs them in exact rational arithmetic.
Any other continuous model goes through :class:`_GridOps`, a fixed
composite-Simpson grid (approximate, close to 1e-9 for Gaussians).

Couple members ``K`` and ``M`` are drawn independently from ``C``
(mean field); an agent left by its partner returns to a fresh draw from
the self-utility law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from ..errors import InconsistentStateError, InvalidSpecError
from ..model import DistributionSpec, Family
from .poly import Poly, as_fraction

#: grid points of the approximate mode (odd, for Simpson)
GRID_POINTS = 2**13 + 1
#: Gaussian support truncated at this many standard deviations
GAUSS_RANGE = 12.0


@dataclass(frozen=True)
class ModelSpec:
    p_A: DistributionSpec
    p0_diag: DistributionSpec
    lam: float | None = None

    @classmethod
    def homogeneous(cls, spec, lam=None):
        return cls(spec, spec, lam)

    @property
    def exact(self):
        a, d = self.p_A, self.p0_diag
        return (a.family is Family.UNIFORM and d.family is Family.UNIFORM
                and a.sigma > 0 and (a.mu, a.sigma) == (d.mu, d.sigma))


@dataclass(frozen=True)
class PolyDensity:
    """Polynomial density on a bounded ``support``, zero outside it."""

    support: tuple
    poly: Poly
    #: relative residuals of held-out moments, when reconstructed
    residuals: tuple = field(default=(), compare=False)

    @property
    def coefficients(self):
        return self.poly.coeffs

    def __call__(self, u):
        a, b = self.support
        if isinstance(u, (int, Fraction)):
            return self.poly(Fraction(u)) if a <= u <= b else Fraction(0)
        u = np.asarray(u, dtype=np.float64)
        c = np.array([float(v) for v in reversed(self.poly.coeffs)] or [0.0])
        vals = np.polyval(c, u)
        return np.where((u >= float(a)) & (u <= float(b)), vals, 0.0)

    def integral(self):
        return self.poly.integrate(*self.support)

    def moments(self, n_max):
        return self.poly.moments(*self.support, n_max)

    def min_on_support(self, points=1000):
        a, b = (float(v) for v in self.support)
        return float(np.min(self(np.linspace(a, b, points))))


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density sampled on a uniform grid (approximate mode)."""

    grid: np.ndarray
    values: np.ndarray

    @property
    def support(self):
        return float(self.grid[0]), float(self.grid[-1])

    def __call__(self, u):
        return np.interp(u, self.grid, self.values, left=0.0, right=0.0)

    def integral(self):
        return float(simpson(self.values, x=self.grid))

    def moments(self, n_max):
        return [float(simpson(self.values * self.grid**n, x=self.grid)) for n in range(n_max + 1)]


@dataclass(frozen=True, eq=False)
class MomentState:
    """Mean-field state at step ``t``.

    Moment tuples are indexed by ``n`` from 0. ``couple_moments`` and
    ``couple_density`` are ``None`` while ``b == 0``.
    """

    t: int
    b: object
    r: object
    couple_moments: tuple | None
    single_moments: tuple
    population_moments: tuple
    couple_density: object = None
    single_density: object = None
    exact: bool = True

    @property
    def n_max(self):
        return len(self.population_moments) - 1

    def population_density(self):
        if self.single_density is None:
            return None
        if self.exact:
            parts = self.single_density.poly * self.r
            if self.couple_density is not None:
                parts = parts + self.couple_density.poly * self.b
            return PolyDensity(self.single_density.support, parts)
        vals = self.r * self.single_density.values
        if self.couple_density is not None:
            vals = vals + self.b * self.couple_density.values
        return GridDensity(self.single_density.grid, vals)


class _ExactOps:
    """Polynomials on ``[lo, hi]`` with Uniform affinities."""

    exact = True

    def __init__(self, spec):
        lo, hi = spec.support
        self.lo, self.hi = as_fraction(lo), as_fraction(hi)
        width = self.hi - self.lo
        self.pA = Poly.const(1 / width)
        self.p0 = self.pA
        self.F = Poly([self.hi, -1]) / width  # P(A > x)
        self.G = Poly([-self.lo, 1]) / width  # P(A < x)
        self.one = Poly.const(1)

    def power(self, n):
        return Poly.monomial(n)

    def partial(self, n):
        """``x -> E[A^n; A > x]``."""
        return (self.pA * Poly.monomial(n)).tail(self.hi)

    def expect(self, fn, dist):
        # dist is a sequence of raw moments
        return fn.dot_moments(dist)

    def cumulative(self, p):
        return p.cumulative(self.lo)

    def total(self, p):
        return p.integrate(self.lo, self.hi)

    def density(self, p):
        return PolyDensity((self.lo, self.hi), p)

    def moments_of(self, p, n_max):
        return p.moments(self.lo, self.hi, n_max)


class _GridOps:
    """Arrays on a uniform Simpson grid."""

    exact = False

    def __init__(self, spec_A, spec_0, points=GRID_POINTS):
        for s in (spec_A, spec_0):
            if not s.is_continuous:
                raise InvalidSpecError(
                    f"approximate mode needs continuous laws, got {s.family.value}")
        lo = min(self._range(spec_A)[0], self._range(spec_0)[0])
        hi = max(self._range(spec_A)[1], self._range(spec_0)[1])
        self.grid = np.linspace(lo, hi, points)
        A = spec_A.frozen()
        self.pA = A.pdf(self.grid)
        self.F = A.sf(self.grid)
        self.G = A.cdf(self.grid)
        self.p0 = spec_0.frozen().pdf(self.grid)
        self.one = np.ones_like(self.grid)

    @staticmethod
    def _range(spec):
        if spec.family is Family.GAUSSIAN:
            return spec.mu - GAUSS_RANGE * spec.sigma, spec.mu + GAUSS_RANGE * spec.sigma
        return spec.support

    def power(self, n):
        return self.grid**n

    def partial(self, n):
        f = self.pA * self.grid**n
        cum = cumulative_simpson(f, x=self.grid, initial=0.0)
        return cum[-1] - cum

    def expect(self, fn, dist):
        # dist is a density on the grid
        return float(simpson(fn * dist, x=self.grid))

    def cumulative(self, p):
        return cumulative_simpson(p, x=self.grid, initial=0.0)

    def total(self, p):
        return float(simpson(p, x=self.grid))

    def density(self, p):
        return GridDensity(self.grid, p)

    def moments_of(self, p, n_max):
        return [self.expect(self.grid**n, p) for n in range(n_max + 1)]


def _ops(model):
    return _ExactOps(model.p_A) if model.exact else _GridOps(model.p_A, model.p0_diag)


def initial_state(model, n_max=4):
    """All agents single with utilities drawn from the self-utility law."""
    ops = _ops(model)
    p0 = ops.p0
    moments = tuple(ops.moments_of(p0, n_max))
    one = Fraction(1) if ops.exact else 1.0
    return MomentState(0, one - one, one, None, moments, moments, None,
                       ops.density(p0), exact=ops.exact)


def kernel_moments(ops, b, r, C, S, U, e0, n_max):
    """Kernel-route step: ``(b', r', raw couple moments, raw single moments)``.

    ``C``, ``S``, ``U`` are whatever ``ops.expect`` consumes (raw moments in
    exact mode, grid densities otherwise); ``e0[n] = E[U_0^n]``. Raw moments
    are ``b' E[C'^n]`` and ``r' E[S'^n]``.
    """
    beta = ops.expect(ops.F, U)  # a random partner accepts
    gamma = phi = 0
    if b:
        gamma = ops.expect(ops.F, C)  # a couple member accepts
        phi = 1 - gamma * beta  # the other couple member does not leave
    raw_c, raw_s = [], []
    for n in range(n_max + 1):
        Kn = ops.power(n)
        In = ops.partial(n)
        KnG = Kn * ops.G
        # single K: couples with L iff both like each other, else stays K^n
        rc = r * beta * ops.expect(In, S)
        rs = r * (beta * ops.expect(KnG, S) + (1 - beta) * ops.expect(Kn, S))
        if b:
            # coupled K: switches to L, or keeps K^n if its partner M stays
            rc += b * (beta * (ops.expect(In, C) + phi * ops.expect(KnG, C))
                       + (1 - beta) * phi * ops.expect(Kn, C))
            # left behind: back to a fresh self-utility
            rs += b * e0[n] * gamma * beta * (1 - beta * gamma)
        raw_c.append(rc)
        raw_s.append(rs)
    return raw_c[0], raw_s[0], raw_c, raw_s


def density_step(ops, b, r, pC, pS):
    """Density-route step: ``(b', r', couple density, single density)``."""
    pU = r * pS + (b * pC if b else 0)
    beta = ops.total(ops.F * pU)
    mc = ops.pA * (beta * r) * ops.cumulative(pS)
    ms = pS * r * (ops.one - ops.F * beta)
    if b:
        gamma = ops.total(ops.F * pC)
        phi = 1 - gamma * beta
        mc = mc + ops.pA * (beta * b) * ops.cumulative(pC)
        mc = mc + pC * (b * phi) * (ops.G * beta + (1 - beta))
        ms = ms + ops.p0 * (b * gamma * beta * (1 - beta * gamma))
    b1 = ops.total(mc)
    r1 = ops.total(ms)
    return b1, r1, mc * (1 / b1), ms * (1 / r1)


def _check_input(state):
    total = state.b + state.r
    ok = total == 1 if state.exact else abs(total - 1) < 1e-9
    if not ok:
        raise InconsistentStateError(f"b + r = {total}, expected 1")


def moment_step(state, model, n_max=None):
    """Advance one step.

    With densities present, moments come from the kernel route and the new
    densities from the density route. A moments-only exact state needs at
    least ``n_max + 2`` moments (each step consumes one order).
    """
    _check_input(state)
    ops = _ops(model)
    if ops.exact != state.exact:
        raise InconsistentStateError("state and model disagree on exact mode")
    b, r = state.b, state.r
    have_density = state.single_density is not None
    if n_max is None:
        n_max = state.n_max if have_density else state.n_max - 1
    if ops.exact:
        e0 = ops.moments_of(ops.p0, n_max)
        if have_density:
            S = state.single_density.moments(n_max + 1)
            C = state.couple_density.moments(n_max + 1) if b else None
        else:
            S, C = state.single_moments, state.couple_moments
            if len(S) < n_max + 2:
                raise InconsistentStateError(
                    f"moments-only step to order {n_max} needs {n_max + 2} moments")
        U = [b * C[i] + r * S[i] if b else S[i] for i in range(2)]
    else:
        if not have_density:
            raise InconsistentStateError("approximate mode needs grid densities")
        e0 = ops.moments_of(ops.p0, n_max)
        S = state.single_density.values
        C = state.couple_density.values if b else None
        U = r * S + (b * C if b else 0)

    b1, r1, raw_c, raw_s = kernel_moments(ops, b, r, C, S, U, e0, n_max)
    cm = tuple(v / b1 for v in raw_c)
    sm = tuple(v / r1 for v in raw_s)
    um = tuple(b1 * c + r1 * s for c, s in zip(cm, sm))

    pc = ps = None
    if have_density:
        pC = state.couple_density.poly if (b and ops.exact) else (
            state.couple_density.values if b else None)
        pS = state.single_density.poly if ops.exact else state.single_density.values
        _, _, new_c, new_s = density_step(ops, b, r, pC, pS)
        pc, ps = ops.density(new_c), ops.density(new_s)
    return MomentState(state.t + 1, b1, r1, cm, sm, um, pc, ps, exact=ops.exact)


def evolve(model, steps, n_max=4):
    """States for ``t = 0..steps``."""
    state = initial_state(model, n_max)
    out = [state]
    for _ in range(steps):
        state = moment_step(state, model, n_max)
        out.append(state)
    return out


def moments_only_state(state, n_max):
    """Drop densities, keeping moments up to ``n_max`` (exact mode)."""
    if not state.exact or state.single_density is None:
        raise InconsistentStateError("need an exact state with densities")
    S = tuple(state.single_density.moments(n_max))
    C = tuple(state.couple_density.moments(n_max)) if state.b else None
    U = tuple(state.b * C[i] + state.r * S[i] if state.b else S[i] for i in range(n_max + 1))
    return MomentState(state.t, state.b, state.r, C, S, U, None, None, exact=True)


def first_step_mean(spec):
    """Closed-form ``E[U_1]`` of the homogeneous model (Gaussian or Uniform)."""
    if spec.family is Family.GAUSSIAN:
        return spec.mu + spec.sigma / (2 * math.sqrt(math.pi))
    if spec.family is Family.UNIFORM:
        return spec.mu + spec.sigma / 3
    raise InvalidSpecError("closed form only for Gaussian and Uniform")
