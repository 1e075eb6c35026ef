"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from relsec import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def rate_grid_case(rng):
    qa = np.sort(rng.uniform(0.0, 1.0, 11))[::-1].copy()
    r2, rh = np.meshgrid(np.linspace(0, 2, 400), np.linspace(0, 3, 400))
    return lambda b: b.rate_grid(qa, r2.ravel(), rh.ravel(), 1e-9), "rate_grid 160000 points"


def typicality_case(rng):
    n, ma, mb = 14, 256, 256
    a = rng.integers(0, 2, (ma, n))
    b = rng.integers(0, 2, (mb, n))
    g = rng.integers(0, 2, n)
    t = np.zeros(n, np.int64)
    cond = rng.dirichlet(np.ones(2), 4)
    return (lambda be: be.cond_typicality(a, b, g, t, 2, 1, cond),
            f"cond_typicality {ma}x{mb} words, n={n}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if kernels.compiled_backend is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for make in (rate_grid_case, typicality_case):
        fn, label = make(rng)
        tp, op = best_of(lambda: fn(kernels.python_backend), args.repeat)
        tc, oc = best_of(lambda: fn(kernels.compiled_backend), args.repeat)
        if not np.array_equal(np.asarray(op), np.asarray(oc)):
            print(f"{label}: backends disagree")
            return 1
        print(f"{label:40s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
