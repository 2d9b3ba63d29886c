import numpy as np
import pytest

from matchmarket import AffinityMatrix, DistributionSpec

UNIFORM = DistributionSpec.uniform(0.0, 1.0)
GAUSS = DistributionSpec.gaussian(0.0, 1.0)


def brute_force_step(A, u, partner, married, pairs, lam=None):
    """Direct pair-by-pair transcription of the single/couple update rules
    and the fixed-threshold marriage check. Plain Python, no numpy kernels."""
    n = len(u)
    formed = []
    for k, l in pairs:
        if A[k][l] > u[k] and A[l][k] > u[l]:
            formed.append((k, l))
    in_new = {k for p in formed for k in p}
    new_u = list(u)
    new_p = list(partner)
    for k in range(n):
        if k in in_new:
            continue
        old = partner[k]
        if old >= 0 and old in in_new:
            new_p[k] = -1
            new_u[k] = A[k][k]
    for k, l in formed:
        new_p[k], new_p[l] = l, k
        new_u[k], new_u[l] = A[k][l], A[l][k]
    new_m = list(married)
    if lam is not None:
        for k in range(n):
            l = new_p[k]
            if l >= 0 and not married[k] and new_u[k] > lam and new_u[l] > lam:
                new_m[k] = True
    return new_u, new_p, new_m


@pytest.fixture
def rng_np():
    return np.random.default_rng(12345)


def dense(values):
    return AffinityMatrix.from_array(np.asarray(values, dtype=float))


#: one summary line per acceptance criterion, filled by test_acceptance
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
