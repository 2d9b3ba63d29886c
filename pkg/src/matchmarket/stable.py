"""Gale-Shapley baseline on a bipartite split of the society."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import InvalidInstanceError, NoMatchedAgentsError
from .model import RngStream


@dataclass(frozen=True, eq=False)
class BipartiteInstance:
    """Proposers and reviewers (agent indices) drawing preferences from ``A``."""

    proposers: np.ndarray
    reviewers: np.ndarray
    A: object

    def __post_init__(self):
        p = np.asarray(self.proposers, dtype=np.int64)
        r = np.asarray(self.reviewers, dtype=np.int64)
        object.__setattr__(self, "proposers", p)
        object.__setattr__(self, "reviewers", r)
        if p.size != r.size:
            raise InvalidInstanceError(
                f"sides must have equal size, got {p.size} proposers and {r.size} reviewers")
        if np.intersect1d(p, r).size:
            raise InvalidInstanceError("proposers and reviewers overlap")

    @property
    def size(self):
        return int(self.proposers.size)

    def proposer_utilities(self):
        """``P[i, j]``: utility of proposer ``i`` for reviewer ``j`` (positions)."""
        return self.A.entries(self.proposers[:, None], self.reviewers[None, :])

    def reviewer_utilities(self):
        """``R[j, i]``: utility of reviewer ``j`` for proposer ``i``."""
        return self.A.entries(self.reviewers[:, None], self.proposers[None, :])


@dataclass(frozen=True, eq=False)
class StableMatching:
    """``assignment[i]`` is the reviewer position matched to proposer ``i``."""

    assignment: np.ndarray
    u_gs: float
    proposer_mean: float
    reviewer_mean: float
    proposals: int

    def partner_array(self, inst, n):
        """Length-``n`` partner array in agent indices (``-1`` elsewhere)."""
        partner = np.full(n, -1, dtype=np.int64)
        p = inst.proposers
        r = inst.reviewers[self.assignment]
        partner[p] = r
        partner[r] = p
        return partner


def random_bipartition(n, rng):
    """Uniform random equal split of ``range(n)`` (``n`` even)."""
    if n % 2:
        raise InvalidInstanceError("an equal bipartition needs an even number of agents")
    gen = rng.generator("bipartition") if isinstance(rng, RngStream) else rng
    perm = gen.permutation(n)
    return np.sort(perm[: n // 2]), np.sort(perm[n // 2:])


def _preference_order(util):
    """Descending by utility, ties to the lower index."""
    idx = np.broadcast_to(np.arange(util.shape[1]), util.shape)
    return np.lexsort((idx, -util), axis=1)


def gale_shapley(inst):
    """Proposer-optimal stable matching by deferred acceptance."""
    n = inst.size
    if n == 0:
        raise InvalidInstanceError("empty instance")
    P = inst.proposer_utilities()
    R = inst.reviewer_utilities()
    order = np.ascontiguousarray(_preference_order(P), dtype=np.int64)
    rank = np.empty((n, n), dtype=np.int64)
    rorder = _preference_order(R)
    rows = np.arange(n)[:, None]
    rank[rows, rorder] = np.arange(n)[None, :]
    assignment, proposals = kernels.gale_shapley(order, rank)
    pu = P[np.arange(n), assignment]
    ru = R[assignment, np.arange(n)]
    return StableMatching(
        assignment=assignment,
        u_gs=float((pu.sum() + ru.sum()) / (2 * n)),
        proposer_mean=float(pu.mean()),
        reviewer_mean=float(ru.mean()),
        proposals=int(proposals),
    )


def blocking_pairs(inst, utilities):
    """Cross pairs ``(p, r)`` (agent indices) that both strictly prefer each
    other to their current utilities."""
    utilities = np.asarray(utilities, dtype=np.float64)
    P = inst.proposer_utilities()
    R = inst.reviewer_utilities()
    up = utilities[inst.proposers][:, None]
    ur = utilities[inst.reviewers][None, :]
    block = (P > up) & (R.T > ur)
    i, j = np.nonzero(block)
    return [(int(inst.proposers[a]), int(inst.reviewers[b])) for a, b in zip(i, j)]


def verify_stability(inst, m):
    """Exhaustive list of blocking pairs.

    ``m`` is a :class:`StableMatching` or a length-N partner array (``-1``
    for single). Singles are compared at their self-utility ``A[k, k]``,
    which lets partial matchings from the stochastic model be checked too.
    """
    n = inst.A.n
    partner = m.partner_array(inst, n) if isinstance(m, StableMatching) else np.asarray(m)
    agents = np.concatenate([inst.proposers, inst.reviewers])
    utilities = np.zeros(n)
    mate = partner[agents]
    matched = mate >= 0
    utilities[agents[matched]] = inst.A.entries(agents[matched], mate[matched])
    utilities[agents[~matched]] = inst.A.entries(agents[~matched], agents[~matched])
    return blocking_pairs(inst, utilities)


def matching_avg_utility(A, partner):
    """Mean of ``A[k, partner[k]]`` over matched agents (both sides counted)."""
    partner = np.asarray(partner, dtype=np.int64)
    k = np.flatnonzero(partner >= 0)
    if k.size == 0:
        raise NoMatchedAgentsError("no matched agents")
    return float(np.mean(A.entries(k, partner[k])))
