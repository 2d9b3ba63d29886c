"""Random pairings, couple/break rules, marriage policies and trajectories."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels
from .errors import InconsistentPlanError, InvalidSpecError
from .model import RngStream


@dataclass(frozen=True, eq=False)
class MatchPlan:
    """One step's pairing: disjoint ``pairs`` (m x 2) and ``unmatched`` agents."""

    pairs: np.ndarray
    unmatched: np.ndarray

    def pair_set(self):
        return {frozenset(p) for p in self.pairs.tolist()}

    @property
    def members(self):
        return np.concatenate([self.pairs.ravel(), self.unmatched])


class PolicyKind(str, enum.Enum):
    NONE = "none"
    FIXED = "fixed"
    HETEROGENEOUS = "heterogeneous"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class MarriagePolicy:
    """When a couple stops searching.

    ``FIXED``: both utilities strictly above ``lam``. ``HETEROGENEOUS``:
    agent ``k`` uses its own ``lambda_k ~ N(lam, sigma_lambda)``, drawn once
    per run. ``ADAPTIVE``: agent ``k`` uses the mean plus population standard
    deviation of its own utility history.
    """

    kind: PolicyKind = PolicyKind.NONE
    lam: float = math.inf
    sigma_lambda: float = 0.0
    per_agent_lambda: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.sigma_lambda < 0:
            raise InvalidSpecError("sigma_lambda must be >= 0")

    @classmethod
    def none(cls):
        return cls(PolicyKind.NONE)

    @classmethod
    def fixed(cls, lam):
        if lam is None:
            return cls.none()
        return cls(PolicyKind.FIXED, float(lam))

    @classmethod
    def heterogeneous(cls, lam, sigma_lambda, per_agent_lambda=None):
        return cls(PolicyKind.HETEROGENEOUS, float(lam), float(sigma_lambda), per_agent_lambda)

    @classmethod
    def adaptive(cls):
        return cls(PolicyKind.ADAPTIVE)

    def realised(self, n, rng):
        """Policy with per-agent thresholds drawn (heterogeneous kind only)."""
        if self.kind is not PolicyKind.HETEROGENEOUS or self.per_agent_lambda is not None:
            return self
        gen = rng.generator("lambda") if isinstance(rng, RngStream) else rng
        lam_k = gen.normal(self.lam, self.sigma_lambda, size=n)
        return replace(self, per_agent_lambda=lam_k)


@dataclass(frozen=True, eq=False)
class PartitionSpec:
    """Split of the society; with ``cross_only`` couples only form across groups.

    Members of ``bisexual_subset`` left unpaired across may also pair within
    their own group.
    """

    groups: tuple
    cross_only: bool = True
    bisexual_subset: np.ndarray | None = None

    def __post_init__(self):
        groups = tuple(np.unique(np.asarray(g, dtype=np.int64)) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if self.bisexual_subset is not None:
            object.__setattr__(self, "bisexual_subset",
                               np.unique(np.asarray(self.bisexual_subset, dtype=np.int64)))

    @classmethod
    def sizes(cls, n, sizes, cross_only=True, bisexual_subset=None):
        if sum(sizes) != n:
            raise InvalidSpecError(f"group sizes {sizes} do not add up to {n}")
        edges = np.cumsum([0, *sizes])
        groups = tuple(np.arange(edges[i], edges[i + 1]) for i in range(len(sizes)))
        return cls(groups, cross_only, bisexual_subset)

    @classmethod
    def equal(cls, n, cross_only=True):
        return cls.sizes(n, [n // 2, n - n // 2], cross_only)

    def validate(self, n):
        allidx = np.concatenate(self.groups) if self.groups else np.array([], dtype=np.int64)
        if len(allidx) != n or not np.array_equal(np.sort(allidx), np.arange(n)):
            raise InvalidSpecError("partition groups must partition the agents 0..n-1")
        if self.cross_only and len(self.groups) != 2:
            raise InvalidSpecError("cross-only pairing needs exactly two groups")
        if self.bisexual_subset is not None and len(self.bisexual_subset):
            if not any(np.isin(self.bisexual_subset, g).all() for g in self.groups):
                raise InvalidSpecError("bisexual subset must lie inside one group")


@dataclass(frozen=True, eq=False)
class PopulationState:
    """Snapshot at step ``t``.

    ``partner[k] == -1`` means single. ``married`` is a boolean mask. The
    ``hist_*`` arrays hold the running mean and summed squared deviations
    (Welford) of each agent's utilities ``u_0..u_t`` for the adaptive policy.
    """

    utilities: np.ndarray
    partner: np.ndarray
    married: np.ndarray
    step: int = 0
    hist_mean: np.ndarray | None = None
    hist_m2: np.ndarray | None = None

    def __post_init__(self):
        for name in ("utilities", "partner", "married", "hist_mean", "hist_m2"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    @classmethod
    def initial(cls, A):
        u = _diagonal(A).copy()
        n = A.n
        return cls(u, np.full(n, -1, dtype=np.int64), np.zeros(n, dtype=bool), 0,
                   u.copy(), np.zeros(n))

    @property
    def n(self):
        return self.utilities.shape[0]

    def married_set(self):
        return set(np.flatnonzero(self.married).tolist())

    def eligible(self):
        return np.flatnonzero(~self.married)

    def couples(self):
        """Array of pairs ``(k, l)`` with ``k < l``."""
        k = np.flatnonzero(self.partner > np.arange(self.n))
        return np.stack([k, self.partner[k]], axis=1)

    def check_invariants(self, A):
        """Raise ``AssertionError`` if the structural invariants fail."""
        p = self.partner
        coupled = np.flatnonzero(p >= 0)
        assert np.all(p[p[coupled]] == coupled), "partner is not an involution"
        assert np.all(p[coupled] != coupled), "agent partnered with itself"
        assert np.all(p[self.married] >= 0), "married agent without partner"
        assert np.all(self.married[p[self.married]]), "married partner not married"
        single = np.flatnonzero(p < 0)
        np.testing.assert_array_equal(self.utilities[single], _diagonal(A)[single])
        np.testing.assert_array_equal(self.utilities[coupled], A.entries(coupled, p[coupled]))


@dataclass
class Trajectory:
    states: list
    policy: MarriagePolicy
    partitions: PartitionSpec | None = None
    config: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]

    def __len__(self):
        return len(self.states)


def _diagonal(A):
    diag = getattr(A, "_diag_cache", None)
    if diag is None:
        diag = A.diagonal()
        diag.setflags(write=False)
        A._diag_cache = diag
    return diag


def _generator(rng):
    return rng.generator("pairing") if isinstance(rng, RngStream) else rng


def draw_pairing(eligible, rng):
    """Uniformly random perfect matching of ``eligible``; one agent sits out if odd."""
    eligible = np.asarray(eligible, dtype=np.int64)
    if eligible.size == 0:
        return MatchPlan(np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64))
    perm = _generator(rng).permutation(eligible)
    m = perm.size // 2
    pairs = perm[: 2 * m].reshape(m, 2)
    return MatchPlan(pairs, perm[2 * m:])


def draw_partitioned_plan(partitions, eligible, rng):
    """Pair every eligible agent of the smaller group with a distinct random
    agent of the larger one; leftover bisexual agents get one extra
    within-group pairing pass."""
    eligible = np.asarray(eligible, dtype=np.int64)
    if not partitions.cross_only:
        return draw_pairing(eligible, rng)
    gen = _generator(rng)
    sides = [eligible[np.isin(eligible, g)] for g in partitions.groups]
    small, large = sides if len(sides[0]) <= len(sides[1]) else sides[::-1]
    chosen = gen.permutation(large)
    pairs = np.stack([small, chosen[: len(small)]], axis=1) if len(small) else np.empty((0, 2), np.int64)
    leftover = chosen[len(small):]
    if partitions.bisexual_subset is not None and leftover.size:
        bi = np.isin(leftover, partitions.bisexual_subset)
        extra = draw_pairing(leftover[bi], gen)
        pairs = np.concatenate([pairs, extra.pairs])
        leftover = np.concatenate([leftover[~bi], extra.unmatched])
    return MatchPlan(pairs.astype(np.int64), np.sort(leftover))


def _check_plan(state, plan):
    members = plan.members
    eligible = state.eligible()
    if members.size != eligible.size or not np.array_equal(np.sort(members), eligible):
        raise InconsistentPlanError(
            "plan must cover exactly the unmarried agents, each once")
    if plan.pairs.size and np.any(plan.pairs[:, 0] == plan.pairs[:, 1]):
        raise InconsistentPlanError("agent paired with itself")


def _thresholds(state, policy):
    if policy.kind is PolicyKind.FIXED:
        return np.full(state.n, policy.lam)
    if policy.kind is PolicyKind.HETEROGENEOUS:
        if policy.per_agent_lambda is None:
            raise InvalidSpecError("heterogeneous policy used before thresholds were drawn")
        return np.asarray(policy.per_agent_lambda, dtype=np.float64)
    if policy.kind is PolicyKind.ADAPTIVE:
        count = state.step + 1
        if count < 2:
            return None
        return state.hist_mean + np.sqrt(state.hist_m2 / count)
    return None


def evolve_step(state, A, plan, policy, *, validate=True):
    """Apply one synchronous step and return the next state.

    A matched pair becomes a couple iff both strictly prefer each other to
    their step-``t`` utilities; partners left behind become single with their
    self-utility; then unmarried couples meeting the policy threshold marry.
    """
    if validate:
        _check_plan(state, plan)
    u = state.utilities.copy()
    partner = state.partner.copy()
    a = np.ascontiguousarray(plan.pairs[:, 0], dtype=np.int64)
    b = np.ascontiguousarray(plan.pairs[:, 1], dtype=np.int64)
    vab = np.ascontiguousarray(A.entries(a, b), dtype=np.float64)
    vba = np.ascontiguousarray(A.entries(b, a), dtype=np.float64)
    kernels.evolve(a, b, vab, vba, _diagonal(A), u, partner)

    married = state.married.copy()
    thr = _thresholds(state, policy)
    if thr is not None:
        k = np.flatnonzero((partner >= 0) & ~married)
        l = partner[k]
        ok = (u[k] > thr[k]) & (u[l] > thr[l])
        married[k[ok]] = True

    hist_mean = hist_m2 = None
    if state.hist_mean is not None:
        delta = u - state.hist_mean
        hist_mean = state.hist_mean + delta / (state.step + 2)
        hist_m2 = state.hist_m2 + delta * (u - hist_mean)
    return PopulationState(u, partner, married, state.step + 1, hist_mean, hist_m2)


def run_trajectory(A, T, policy=None, partitions=None, rng=None, *,
                   keep_states=True, observer=None, validate=False):
    """Simulate ``T`` steps from the all-single state.

    ``observer(state)`` is called for every state including ``t = 0``. With
    ``keep_states=False`` only the final state is retained.
    """
    if int(T) != T or T < 1:
        raise InvalidSpecError(f"need T >= 1 steps, got {T}")
    if rng is None:
        rng = RngStream(0)
    policy = (policy or MarriagePolicy.none()).realised(A.n, rng)
    if partitions is not None:
        partitions.validate(A.n)
    state = PopulationState.initial(A)
    states = [state]
    if observer is not None:
        observer(state)
    for _ in range(int(T)):
        eligible = state.eligible()
        if partitions is None:
            plan = draw_pairing(eligible, rng)
        else:
            plan = draw_partitioned_plan(partitions, eligible, rng)
        state = evolve_step(state, A, plan, policy, validate=validate)
        if validate:
            state.check_invariants(A)
        if observer is not None:
            observer(state)
        if keep_states:
            states.append(state)
        else:
            states[-1:] = [state]
    return Trajectory(states, policy, partitions)
