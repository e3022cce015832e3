"""Time the compiled kernels against their pure-Python / numpy fallbacks.

    python benchmarks/bench_kernels.py [--reps 5]

Both implementations are imported from the same module, so the comparison
does not depend on CAUSALKG_NO_NUMBA.
"""

import argparse
import time

import numpy as np

from causalkg import kernels


def random_digraph(rng, n, p):
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return kernels.to_csr(n, src, dst)


def best_of(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if not kernels.USE_NUMBA:
        print("numba disabled (CAUSALKG_NO_NUMBA set or numba missing); the 'numba' column runs the fallback", flush=True)

    print(f"{'case':<34}{'numba':>12}{'fallback':>12}{'speedup':>10}", flush=True)

    # simple cycles on generated-graph-sized inputs
    for n, p in ((20, 0.10), (30, 0.08), (36, 0.10)):
        indptr, indices = random_digraph(rng, n, p)
        cap = 100_000
        kernels.count_simple_cycles_kernel(indptr, indices, n, cap)  # compile
        t_fast, a = best_of(lambda: kernels.count_simple_cycles_kernel(indptr, indices, n, cap), args.reps)
        t_slow, b = best_of(lambda: kernels._count_simple_cycles_py(indptr, indices, n, cap), 1)
        assert tuple(a) == tuple(b)
        print(f"{f'cycles n={n} p={p} ({a[0]} cycles)':<34}{t_fast:>11.4f}s{t_slow:>11.4f}s{t_slow / t_fast:>9.1f}x", flush=True)

    # hop-bounded reachability on a reference-graph-sized input
    for n, m, q in ((20_000, 60_000, 2_000), (100_000, 300_000, 5_000)):
        s, d = rng.integers(0, n, m), rng.integers(0, n, m)
        und = np.unique(np.stack([np.r_[s, d], np.r_[d, s]], 1), axis=0)
        indptr, indices = kernels.to_csr(n, und[:, 0], und[:, 1])
        qs, qd = rng.integers(0, n, q), rng.integers(0, n, q)
        kernels.bounded_reachable_kernel(indptr, indices, qs[:2], qd[:2], 6)  # compile
        t_fast, a = best_of(lambda: kernels.bounded_reachable_kernel(indptr, indices, qs, qd, 6), args.reps)
        t_slow, b = best_of(lambda: kernels._bounded_reachable_numpy(indptr, indices, qs, qd, 6), 1)
        assert (a == b).all()
        print(f"{f'reach n={n} q={q} hops=6':<34}{t_fast:>11.4f}s{t_slow:>11.4f}s{t_slow / t_fast:>9.1f}x", flush=True)


if __name__ == "__main__":
    main()
