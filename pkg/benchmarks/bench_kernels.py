"""Compiled vs pure-numpy kernels, each timed in isolation, plus end-to-end draws.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from htwishart.kernels import available_backends, c64, get_backend
from htwishart.model import ModelParams
from htwishart.sampling import RngState, draw_batch


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(n, K, N, seed=0):
    rng = np.random.default_rng(seed)
    chi2 = c64(rng.chisquare(N + 5.0, size=(n, N)))
    normals = c64(rng.standard_normal((n, N * (N - 1) // 2)))
    T = get_backend("python").bartlett_factors(chi2, normals)
    Z = c64(rng.standard_normal((n, K, N)))
    A = c64(np.linalg.cholesky(np.eye(K) + 0.2))
    R = c64(np.eye(N) + 0.1)
    X = get_backend("python").assemble_alg(T, Z, A, R, 1.0)
    J = c64(np.eye(K) * 0.1)
    return {
        "bartlett_factors": lambda k: k.bartlett_factors(chi2, normals),
        "assemble_alg": lambda k: k.assemble_alg(T, Z, A, R, 1.0),
        "assemble_gauss": lambda k: k.assemble_gauss(Z, A, R),
        "gram_batch(time, 2)": lambda k: k.gram_batch(X, 0, 2),
        "gram_batch(position, 1)": lambda k: k.gram_batch(X, 1, 1),
        "inverse_entries": lambda k: k.inverse_entries(T),
        "trace_form": lambda k: k.trace_form(X, J, float(N)),
        "condition_bound": lambda k: k.condition_bound(T),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--K", type=int, default=3)
    ap.add_argument("--N", type=int, default=4)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}; n={args.n}, K={args.K}, N={args.N}, best of {args.repeat}")
    print(f"{'kernel':<26}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in kernel_cases(args.n, args.K, args.N).items():
        t = {b: best_of(lambda: fn(get_backend(b)), args.repeat) for b in backends}
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{name:<26}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends) + f"{speed:>9.1f}x")

    p = ModelParams.identity(args.K, args.N, (args.K + args.N) / 2 + 4.0, 1.0)
    for model in ("alg", "gauss"):
        t = {b: best_of(lambda: draw_batch(p, model, args.n, RngState(1), backend=get_backend(b)),
                        max(1, args.repeat // 2))
             for b in backends}
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{'draw_batch(' + model + ')':<26}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends)
              + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
