"""Pure numpy implementation of the hot kernels.

This is the reference the compiled ``_ckernels`` module must reproduce bit
for bit. Affinity entries come from a counter-based generator: the raw 64
bits of entry ``(i, j)`` are the SplitMix64 output at position
``(i << 32 | j) + 1`` of the stream seeded with ``key``, so any entry can be
regenerated on demand without storing the matrix.

Distribution codes: 0 Gaussian ``(mu, sigma)``, 1 Uniform ``(low, width)``,
2 PointMass ``(value, unused)``.
"""

import numpy as np
from scipy.special import ndtri

BACKEND = "python"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S12 = np.uint64(12)
_ONE = np.uint64(1)
_ULP52 = 2.0 ** -52

# rows per block when streaming the whole matrix
_BLOCK = 256


def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _uniform(key, rows, cols):
    counter = (rows.astype(np.uint64) << _S32) | cols.astype(np.uint64)
    with np.errstate(over="ignore"):
        bits = _mix64(np.uint64(key) + (counter + _ONE) * _GOLDEN)
    # 52 random bits plus one half: exact, strictly inside (0, 1)
    return ((bits >> _S12).astype(np.float64) + 0.5) * _ULP52


def _transform(u, code, a, b):
    if code == 0:
        return a + b * ndtri(u)
    if code == 1:
        return a + b * u
    return np.full(u.shape, a, dtype=np.float64)


def entries(key, rows, cols, off_code, off_a, off_b, diag_code, diag_a, diag_b):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    rows, cols = np.broadcast_arrays(rows, cols)
    u = _uniform(key, rows, cols)
    out = _transform(u, off_code, off_a, off_b)
    on_diag = rows == cols
    if on_diag.any():
        out = np.asarray(out, dtype=np.float64).copy()
        out[on_diag] = _transform(u[on_diag], diag_code, diag_a, diag_b)
    return np.asarray(out, dtype=np.float64)


def fill_rows(key, n, r0, r1, off_code, off_a, off_b, diag_code, diag_a, diag_b):
    rows = np.arange(r0, r1, dtype=np.int64)[:, None]
    cols = np.arange(n, dtype=np.int64)[None, :]
    return entries(key, rows, cols, off_code, off_a, off_b, diag_code, diag_a, diag_b)


def offdiag_column_sums(key, n, off_code, off_a, off_b):
    """Sum over ``j != k`` of entry ``(j, k)`` for every column ``k``."""
    sums = np.zeros(n, dtype=np.float64)
    cols = np.arange(n, dtype=np.int64)[None, :]
    for r0 in range(0, n, _BLOCK):
        r1 = min(n, r0 + _BLOCK)
        rows = np.arange(r0, r1, dtype=np.int64)[:, None]
        block = _transform(_uniform(key, *np.broadcast_arrays(rows, cols)), off_code, off_a, off_b)
        block = np.array(block, dtype=np.float64)
        idx = np.arange(r0, r1)
        block[idx - r0, idx] = 0.0
        # row-by-row accumulation keeps the summation order of the C kernel
        for row in block:
            sums += row
    return sums


def evolve(a, b, vab, vba, diag, u, partner):
    """Synchronous couple update for one pairing, in place.

    ``vab[i]`` is the affinity of ``a[i]`` for ``b[i]`` and ``vba[i]`` the
    reverse. Returns a boolean mask of pairs that became couples.
    """
    formed = (vab > u[a]) & (vba > u[b])
    fa = a[formed]
    fb = b[formed]
    movers = np.concatenate([fa, fb])
    in_new = np.zeros(u.shape[0], dtype=bool)
    in_new[movers] = True
    left = partner[movers]
    left = left[left >= 0]
    left = left[~in_new[left]]
    partner[left] = -1
    u[left] = diag[left]
    partner[fa] = fb
    partner[fb] = fa
    u[fa] = vab[formed]
    u[fb] = vba[formed]
    return formed


def gale_shapley(order, rank):
    """Proposer-proposing deferred acceptance.

    ``order[p]`` lists reviewer positions from most to least preferred;
    ``rank[r, p]`` is reviewer ``r``'s rank of proposer ``p`` (0 = best).
    Returns ``(assignment, proposals)`` with ``assignment[p]`` a reviewer
    position.
    """
    n = order.shape[0]
    order = order.tolist()
    rank = rank.tolist()
    nxt = [0] * n
    held = [-1] * n
    free = list(range(n - 1, -1, -1))
    proposals = 0
    while free:
        p = free.pop()
        r = order[p][nxt[p]]
        nxt[p] += 1
        proposals += 1
        q = held[r]
        if q < 0:
            held[r] = p
        elif rank[r][p] < rank[r][q]:
            held[r] = p
            free.append(q)
        else:
            free.append(p)
    assignment = np.empty(n, dtype=np.int64)
    assignment[np.asarray(held, dtype=np.int64)] = np.arange(n, dtype=np.int64)
    return assignment, proposals
