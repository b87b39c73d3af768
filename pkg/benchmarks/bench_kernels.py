"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from shuttercert.checks import random_mixed_instance
from shuttercert.extractor import ToeplitzHasher, make_seed
from shuttercert.oracle import solve_mean_constraint_bruteforce, solve_mixed_lp


def best_of(fn, repeat):
    fn()  # warm-up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_toeplitz(backend, repeat):
    n, m = 83000, 13661
    h = ToeplitzHasher(make_seed(0, n, m), n, m, max_reuse=10 ** 9, backend=backend)
    x = np.random.default_rng(0).integers(0, 2, n).astype(np.uint8)
    t = best_of(lambda: h.hash(x), repeat)
    return t, f"{n / t / 1e6:.1f} Mbit/s"


def bench_simplex(backend, repeat):
    rng = np.random.default_rng(1)
    inst = [random_mixed_instance(rng, 10) for _ in range(200)]

    def run():
        for src, a, b in inst:
            solve_mixed_lp(src, a, b, backend=backend)

    t = best_of(run, repeat)
    return t, f"{len(inst) / t:.0f} LPs/s"


def bench_grid(backend, repeat):
    t = best_of(lambda: solve_mean_constraint_bruteforce(1.3, 0.45, 0.42, 0.02, 10, 1e-2, backend=backend),
                repeat)
    return t, "support 10, grid 1e-2"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':<10} {'backend':<7} {'seconds':>9}  rate")
    for name, fn in (("toeplitz", bench_toeplitz), ("simplex", bench_simplex), ("grid", bench_grid)):
        for backend in ("numba", "numpy"):
            t, rate = fn(backend, args.repeat)
            print(f"{name:<10} {backend:<7} {t:9.4f}  {rate}")


if __name__ == "__main__":
    main()
