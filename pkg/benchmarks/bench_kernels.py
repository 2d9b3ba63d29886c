"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--repeat 5]

Each row reports the best of ``--repeat`` timings for both backends on
identical inputs and checks that the outputs agree bit for bit.
"""

import argparse
import sys
import timeit

import numpy as np

from matchmarket._backend import compiled_available, get_kernels
from matchmarket.model import RngStream

GAUSS = (1, 0.0, 1.0, 1, 0.0, 1.0)  # family code, mu, sigma for offdiag and diag


def cases(n):
    key = RngStream(0).key("affinity")
    g = np.random.default_rng(0)
    rows = g.integers(0, n, 200_000)
    cols = g.integers(0, n, 200_000)

    perm = g.permutation(n)
    a, b = perm[: n // 2].copy(), perm[n // 2:2 * (n // 2)].copy()
    vab, vba = g.normal(size=a.size), g.normal(size=a.size)
    diag, u0 = g.normal(size=n), g.normal(size=n)
    p0 = np.full(n, -1, dtype=np.int64)

    def evolve(k):
        u, p = u0.copy(), p0.copy()
        for _ in range(20):  # 20 steps of the single/couple update
            k.evolve(a, b, vab, vba, diag, u, p)
        return u, p

    m = min(n // 2, 1000)
    order = np.argsort(-g.random((m, m)), axis=1)
    rank = np.argsort(np.argsort(-g.random((m, m)), axis=1), axis=1)

    return [
        ("entries (2e5 lookups)", lambda k: k.entries(key, rows, cols, *GAUSS)),
        (f"fill_rows ({min(n, 500)} x {n})", lambda k: k.fill_rows(key, n, 0, min(n, 500), *GAUSS)),
        (f"column sums (N={n})", lambda k: k.offdiag_column_sums(key, n, *GAUSS[:3])),
        (f"evolve x20 (N={n})", evolve),
        (f"gale_shapley ({m} x {m})", lambda k: k.gale_shapley(order, rank)),
    ]


def same(x, y):
    if isinstance(x, tuple):
        return all(same(a, b) for a, b in zip(x, y))
    if isinstance(x, np.ndarray):
        return np.array_equal(x, y) if x.dtype.kind != "f" else np.array_equal(
            x.view(np.uint64), y.view(np.uint64)) or np.allclose(x, y, rtol=1e-12)
    return x == y


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not compiled_available():
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`")
        return 1
    py, cy = get_kernels("python"), get_kernels("cython")
    print(f"{'kernel':<28}{'python [ms]':>13}{'cython [ms]':>13}{'speedup':>10}  match")
    for name, fn in cases(args.n):
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        ok = same(fn(py), fn(cy))
        print(f"{name:<28}{t_py:>13.2f}{t_cy:>13.2f}{t_py / t_cy:>9.1f}x  {'yes' if ok else 'NO'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
