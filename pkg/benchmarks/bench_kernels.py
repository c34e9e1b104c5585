"""Timing comparison of the compiled and pure-Python constraint kernels.

Runs each kernel on identical inputs at several problem sizes and reports
best-of-N wall times plus the speedup of the compiled extension. Also times
one end-to-end training run per backend via a subprocess so the backend
selection happens at interpreter start.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--skip-train]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from tripletboost import _kernels_py

try:
    from tripletboost import _kernels
except ImportError:
    _kernels = None

SIZES = [(500, 5), (2000, 10), (9000, 10), (9000, 30), (40000, 10)]


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    header = f"{'kernel':<18} {'n':>6} {'dim':>4} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, dim in SIZES:
        U = np.ascontiguousarray(rng.standard_normal((n, dim)))
        V = np.ascontiguousarray(rng.standard_normal((n, dim)))
        w = np.ascontiguousarray(rng.uniform(0.0, 1.0, n))
        x = np.ascontiguousarray(rng.standard_normal(dim))
        xi = x / np.linalg.norm(x)
        X = rng.standard_normal((dim, dim))
        X = np.ascontiguousarray(X @ X.T)
        h = _kernels_py.margins_rank_one(U, V, xi)
        u = np.full(n, 1.0 / n)
        cases = [
            ("weighted_matvec", lambda m: m.weighted_matvec(U, V, w, x)),
            ("margins_rank_one", lambda m: m.margins_rank_one(U, V, xi)),
            ("margins_full", lambda m: m.margins_full(U, V, X)),
            ("line_search_lhs", lambda m: m.line_search_lhs(h, u, 1e-7, 0.4)),
        ]
        for name, call in cases:
            t_py = best_of(lambda: call(_kernels_py), repeats)
            if _kernels is None:
                print(f"{name:<18} {n:>6} {dim:>4} {t_py * 1e6:>8.1f}us {'n/a':>10} {'n/a':>8}")
                continue
            t_c = best_of(lambda: call(_kernels), repeats)
            print(
                f"{name:<18} {n:>6} {dim:>4} {t_py * 1e6:>8.1f}us "
                f"{t_c * 1e6:>8.1f}us {t_py / t_c:>7.2f}x"
            )


def bench_training():
    code = (
        "import time\n"
        "from tripletboost import TrainConfig, factors_from_dataset, "
        "generate_triplets, make_circles, train\n"
        "from tripletboost import backends\n"
        "data = make_circles(n_points=1000, n_classes=4, dim=10, seed=0)\n"
        "factors = factors_from_dataset(data, generate_triplets(data, 3))\n"
        "t0 = time.perf_counter()\n"
        "model, state = train(factors, TrainConfig(v=1e-7, max_iters=500))\n"
        "print(f'{backends.backend_name}: {time.perf_counter() - t0:.3f}s "
        "({len(state.history)} iterations)')\n"
    )
    print()
    print("end-to-end training (1000-point ring data, 9000 triplets):")
    for name in ("python", "compiled"):
        if name == "compiled" and _kernels is None:
            print("compiled: extension not built")
            continue
        env = dict(os.environ, TRIPLETBOOST_BACKEND=name)
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        sys.stdout.write(out.stdout or out.stderr)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--repeats", type=int, default=7, help="repetitions per timing (best kept)"
    )
    parser.add_argument(
        "--skip-train", action="store_true", help="only benchmark the raw kernels"
    )
    args = parser.parse_args()
    if _kernels is None:
        print("note: compiled extension not available; showing python times only")
    bench_kernels(args.repeats)
    if not args.skip_train:
        bench_training()


if __name__ == "__main__":
    main()
