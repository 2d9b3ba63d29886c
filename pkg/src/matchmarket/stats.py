"""Per-step aggregates, histograms, cohorts and the adaptive proposal rule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError, UndefinedThresholdError


@dataclass(frozen=True, eq=False)
class StepStats:
    """Population statistics at one step.

    ``moments[n]`` is the sample moment ``E[U_t^n]`` for ``n = 0..n_max``
    (``moments[0] == 1``). Standard deviations are population ones. Married
    agents are part of every statistic.
    """

    step: int
    mean_utility: float
    std_utility: float
    moments: np.ndarray
    couple_share: float
    single_share: float
    married_share: float
    cohort_means: dict = field(default_factory=dict)


def summarize_step(state, n_max=4, cohorts=None):
    if n_max < 2:
        raise InvalidSpecError("n_max must be >= 2")
    u = np.asarray(state.utilities, dtype=np.float64)
    n = u.shape[0]
    mean = float(np.mean(u))
    moments = np.empty(n_max + 1)
    moments[0] = 1.0
    moments[1] = mean
    power = u.copy()
    for k in range(2, n_max + 1):
        power *= u
        moments[k] = float(np.mean(power))
    coupled = int(np.count_nonzero(state.partner >= 0))
    couple_share = coupled / n
    cohort_means = {}
    for name, idx in (cohorts or {}).items():
        cohort_means[name] = float(np.mean(u[np.asarray(idx)]))
    return StepStats(
        step=int(state.step),
        mean_utility=mean,
        std_utility=float(np.std(u)),
        moments=moments,
        couple_share=couple_share,
        # complement rather than count/n: the two shares must add to exactly 1
        single_share=1.0 - couple_share,
        married_share=int(np.count_nonzero(state.married)) / n,
        cohort_means=cohort_means,
    )


def summarize_trajectory(traj, n_max=4, cohorts=None):
    return [summarize_step(s, n_max, cohorts) for s in traj.states]


@dataclass(frozen=True, eq=False)
class Histogram:
    """Fixed-width bins aligned to ``anchor + k * bin_width``.

    ``origin`` is the left edge of the first bin. With ``normalized`` set,
    :attr:`heights` is a density (integrates to 1), otherwise raw counts.
    """

    bin_width: float
    origin: float
    counts: np.ndarray
    normalized: bool = False

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def edges(self):
        return self.origin + self.bin_width * np.arange(self.counts.size + 1)

    @property
    def heights(self):
        if not self.normalized:
            return self.counts.astype(np.float64)
        total = self.total
        if total == 0:
            return np.zeros(self.counts.size)
        return self.counts / (total * self.bin_width)


def histogram(values, bin_width, origin=0.0, normalized=False):
    if not bin_width > 0:
        raise InvalidSpecError("bin_width must be > 0")
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        return Histogram(float(bin_width), float(origin), np.zeros(0, dtype=np.int64), normalized)
    idx = np.floor((values - origin) / bin_width).astype(np.int64)
    lo = int(idx.min())
    counts = np.bincount(idx - lo)
    return Histogram(float(bin_width), float(origin + lo * bin_width), counts, normalized)


class Direction(str, enum.Enum):
    MOST_LIKED = "most_liked"
    LEAST_LIKED = "least_liked"


def cohort_select(A, fraction, direction=Direction.MOST_LIKED, column_means=None):
    """Indices of the ``ceil(fraction * N)`` most (or least) liked agents.

    Liking is the column mean ``mean_{j != k} A[j, k]``; ties go to the lower
    index. Pass precomputed ``column_means`` to avoid an O(N^2) pass.
    """
    direction = Direction(direction)
    if not 0 < fraction <= 1:
        raise InvalidSpecError("fraction must lie in (0, 1]")
    n = A.n
    # round before ceil so 0.01 * 10000 is 100, not 101
    size = math.ceil(round(fraction * n, 9))
    if size < 1:
        raise InvalidSpecError("cohort would be empty")
    liking = A.column_means() if column_means is None else np.asarray(column_means)
    key = -liking if direction is Direction.MOST_LIKED else liking
    order = np.argsort(key, kind="stable")
    return np.sort(order[:size])


def adaptive_threshold(history):
    """Mean plus population standard deviation of a utility history.

    A couple member proposes only if its next utility strictly exceeds this.
    """
    h = np.asarray(history, dtype=np.float64)
    if h.size == 0:
        raise UndefinedThresholdError("empty utility history")
    return float(h.mean() + h.std())


def standard_error(samples):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 2:
        return math.nan
    return float(samples.std(ddof=1) / math.sqrt(samples.size))
