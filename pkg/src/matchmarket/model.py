"""Affinity model, random streams and the affine-scaling dictionary."""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from ._backend import kernels
from .errors import InvalidPopulationError, InvalidSpecError, InvalidTransformError

MASK64 = (1 << 64) - 1

#: matrices up to this many bytes are materialised; larger ones are
#: regenerated entry by entry from the counter-based stream
DEFAULT_MEMORY_BUDGET = 256 * 2**20


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    POINT_MASS = "point_mass"


@dataclass(frozen=True)
class DistributionSpec:
    """Generating law of affinity entries.

    ``Uniform`` denotes the support ``[mu - 2 sigma, mu + 2 sigma]``, so
    ``DistributionSpec.uniform(0, 1)`` is U(-2, 2). ``PointMass`` is the
    ``sigma -> 0`` limit and always has ``sigma == 0``.
    """

    family: Family
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise InvalidSpecError(f"non-finite parameters in {self}")
        if self.sigma < 0:
            raise InvalidSpecError(f"sigma must be >= 0, got {self.sigma}")
        if self.family is Family.POINT_MASS and self.sigma != 0:
            raise InvalidSpecError("a point mass has sigma == 0")

    @classmethod
    def gaussian(cls, mu=0.0, sigma=1.0):
        return cls(Family.GAUSSIAN, float(mu), float(sigma))

    @classmethod
    def uniform(cls, mu=0.0, sigma=1.0):
        return cls(Family.UNIFORM, float(mu), float(sigma))

    @classmethod
    def point_mass(cls, value=0.0):
        return cls(Family.POINT_MASS, float(value), 0.0)

    @property
    def support(self):
        if self.family is Family.GAUSSIAN:
            return (-math.inf, math.inf) if self.sigma > 0 else (self.mu, self.mu)
        if self.family is Family.UNIFORM:
            return (self.mu - 2 * self.sigma, self.mu + 2 * self.sigma)
        return (self.mu, self.mu)

    @property
    def std(self):
        if self.family is Family.UNIFORM:
            return 2 * self.sigma / math.sqrt(3)
        return self.sigma

    @property
    def is_continuous(self):
        return self.family is not Family.POINT_MASS and self.sigma > 0

    def kernel_params(self):
        """``(code, a, b)`` triple understood by the kernels."""
        if self.family is Family.GAUSSIAN:
            return 0, self.mu, self.sigma
        if self.family is Family.UNIFORM:
            return 1, self.mu - 2 * self.sigma, 4 * self.sigma
        return 2, self.mu, 0.0

    def frozen(self):
        """The equivalent ``scipy.stats`` distribution (continuous specs only)."""
        if not self.is_continuous:
            raise InvalidSpecError(f"{self.family.value} has no density")
        if self.family is Family.GAUSSIAN:
            return stats.norm(self.mu, self.sigma)
        lo, hi = self.support
        return stats.uniform(lo, hi - lo)

    def mapped(self, scale, shift):
        if self.family is Family.POINT_MASS:
            return DistributionSpec.point_mass(scale * self.mu + shift)
        return replace(self, mu=scale * self.mu + shift, sigma=scale * self.sigma)


def _mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def purpose_id(purpose):
    digest = hashlib.blake2b(purpose.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """Reproducible randomness for one run.

    Each named purpose gets its own substream: ``key(purpose)`` is a 64-bit
    key for the counter-based entry generator, ``generator(purpose)`` a
    numpy ``Generator`` over ``Philox`` seeded with ``(seed, purpose)``.
    Generators are created once and then advance with use, so equal seeds
    and equal call sequences give identical draws on every platform.
    """

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self._generators = {}

    def __repr__(self):
        return f"RngStream(seed={self.seed})"

    def key(self, purpose):
        return _mix64(self.seed ^ _mix64(purpose_id(purpose)))

    def generator(self, purpose):
        gen = self._generators.get(purpose)
        if gen is None:
            seq = np.random.SeedSequence([self.seed, purpose_id(purpose)])
            gen = np.random.Generator(np.random.Philox(seq))
            self._generators[purpose] = gen
        return gen


class AffinityMatrix:
    """Pairwise utilities ``A[i, j]``; ``A[k, k]`` is the utility of being single.

    Generated matrices are either materialised (``is_dense``) or regenerated
    on demand from the counter-based stream; both give identical entries.
    Matrices built with :meth:`from_array` are always dense. Instances are
    immutable.
    """

    def __init__(self, n, offdiag_spec, diag_spec, *, key=None, base=None,
                 transforms=(), values=None):
        self.n = int(n)
        self.offdiag_spec = offdiag_spec
        self.diag_spec = diag_spec
        self._key = key
        self._base = base  # (offdiag, diag) specs the stream was drawn from
        self.transforms = tuple(transforms)
        if values is not None:
            values = np.array(values, dtype=np.float64)
            values.setflags(write=False)
        self._values = values

    @classmethod
    def from_array(cls, values, offdiag_spec=None, diag_spec=None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidPopulationError(f"affinity matrix must be square, got {values.shape}")
        if values.shape[0] < 2:
            raise InvalidPopulationError("need at least 2 agents")
        return cls(values.shape[0], offdiag_spec, diag_spec, values=values)

    @property
    def is_dense(self):
        return self._values is not None

    @property
    def values(self):
        """Dense ``n x n`` array (computed on each access for lazy matrices)."""
        if self._values is not None:
            return self._values
        return self._fill(0, self.n)

    def _params(self):
        off, diag = self._base
        return (*off.kernel_params(), *diag.kernel_params())

    def _apply(self, x):
        for scale, shift in self.transforms:
            x = scale * x + shift
        return x

    def _fill(self, r0, r1):
        block = kernels.fill_rows(self._key, self.n, r0, r1, *self._params())
        return self._apply(block)

    def entries(self, rows, cols):
        """Vectorised gather of ``A[rows, cols]``."""
        if self._values is not None:
            return self._values[np.asarray(rows), np.asarray(cols)]
        base = kernels.entries(self._key, rows, cols, *self._params())
        return self._apply(base)

    def __getitem__(self, ij):
        i, j = ij
        return float(self.entries(np.array([i]), np.array([j]))[0])

    def diagonal(self):
        idx = np.arange(self.n)
        return np.ascontiguousarray(self.entries(idx, idx), dtype=np.float64)

    def column_means(self):
        """Mean over ``j != k`` of ``A[j, k]``: how much agent ``k`` is liked."""
        if self._values is not None:
            total = self._values.sum(axis=0) - np.diag(self._values)
            return total / (self.n - 1)
        off = self._base[0]
        sums = kernels.offdiag_column_sums(self._key, self.n, *off.kernel_params())
        return self._apply(sums / (self.n - 1))

    def row_means(self):
        """Mean over ``j != k`` of ``A[k, j]``: how much agent ``k`` likes others."""
        values = self.values
        return (values.sum(axis=1) - np.diag(values)) / (self.n - 1)


def build_affinity(n, offdiag, diag, rng, *, dense=None, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Draw an ``n x n`` affinity matrix.

    Off-diagonal entries follow ``offdiag`` and self-utilities ``diag``; the
    homogeneous model is ``diag == offdiag``. ``dense=None`` materialises the
    matrix only if it fits ``memory_budget`` bytes.
    """
    if int(n) != n or n < 2:
        raise InvalidPopulationError(f"need n >= 2 agents, got {n}")
    for spec in (offdiag, diag):
        if not isinstance(spec, DistributionSpec):
            raise InvalidSpecError(f"expected DistributionSpec, got {spec!r}")
        if spec.sigma < 0:
            raise InvalidSpecError(f"sigma must be >= 0, got {spec.sigma}")
    n = int(n)
    if n >= 2**32:
        raise InvalidPopulationError("agent indices must fit in 32 bits")
    key = rng.key("affinity")
    A = AffinityMatrix(n, offdiag, diag, key=key, base=(offdiag, diag))
    if dense is None:
        dense = n * n * 8 <= memory_budget
    if dense:
        A._values = A._fill(0, n)
        A._values.setflags(write=False)
    return A


def affine_map(A, scale, shift):
    """Return the matrix with every entry replaced by ``scale * A_ij + shift``.

    Only ``scale > 0`` keeps every comparison between entries, which is what
    makes trajectories map as ``u -> scale * u + shift``.
    """
    if not (math.isfinite(scale) and math.isfinite(shift)):
        raise InvalidTransformError("scale and shift must be finite")
    if scale <= 0:
        raise InvalidTransformError(f"scale must be > 0 (order reversal), got {scale}")
    off = A.offdiag_spec.mapped(scale, shift) if A.offdiag_spec is not None else None
    diag = A.diag_spec.mapped(scale, shift) if A.diag_spec is not None else None
    values = None
    if A.is_dense:
        values = scale * A._values + shift
    return AffinityMatrix(A.n, off, diag, key=A._key, base=A._base,
                          transforms=A.transforms + ((float(scale), float(shift)),),
                          values=values)
