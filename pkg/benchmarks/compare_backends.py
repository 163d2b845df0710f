"""Compare the numba kernels against the pure-numpy fallback on the same
workloads: weight generation, a standard-history FEM solve and a fast-history
solve. Run as `python benchmarks/compare_backends.py [--quick]`.

The default backend is picked by the SUBDIFF_KERNELS env var; this script
switches at runtime to time both.
"""
import argparse
import time

from subdiff import sftr_weights, solve
from subdiff._kernels import use_backend
from subdiff.experiments import build_problem


def time_best(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(quick):
    n_steps = 1024 if quick else 4096
    ncells = 200 if quick else 1000

    def weights():
        sftr_weights(0.4, 0.2, 50_000)

    def standard():
        prob, _, _ = build_problem("ex1", 0.5, 0.3, 1.0 / n_steps, n_steps,
                                   ncells)
        solve(prob)

    def fast():
        prob, _, _ = build_problem("ex2i", 0.3, 0.1, 1.0 / (4 * n_steps),
                                   4 * n_steps, 65, history="fast2")
        solve(prob)

    return [("weight recursion (k=50000)", weights),
            (f"standard solve (N={n_steps}, {ncells} cells)", standard),
            (f"fast solve (N={4 * n_steps}, 65 cells)", fast)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print(f"{'workload':42s} {'numpy':>10s} {'numba':>10s} {'speedup':>9s}")
    for name, fn in workloads(args.quick):
        results = {}
        for backend in ("numba", "numpy"):
            with use_backend(backend):
                fn()  # warm (jit compile / cache touch)
                results[backend] = time_best(fn, args.repeats)
        print(f"{name:42s} {results['numpy']:9.3f}s {results['numba']:9.3f}s "
              f"{results['numpy'] / results['numba']:8.1f}x")


if __name__ == "__main__":
    main()
