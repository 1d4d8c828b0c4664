"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Both backends draw the same uniforms, so each pair of runs is also checked
for identical output before the timings are printed.
"""
import argparse
import time

import numpy as np

from primecoupling import get_tables, kernels
from primecoupling.couplings import feller_batch, growth_model
from primecoupling.samplers import RandomSource


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return all(_same(x, y) for x, y in zip(vars(a).values(), vars(b).values())
               if isinstance(x, np.ndarray))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")

    scale = 10 if args.quick else 1
    tables = get_tables(10**6)
    n_grow = 10**4
    model = growth_model(n_grow, tables, mode="exact_uniform")

    cases = [
        ("sieve 1e7", lambda b: kernels.get_backend(b).smallest_prime_factors(10**7 // scale)),
        ("feller n=1000 x 2e4", lambda b: feller_batch(
            1000, 20_000 // scale, 1000.0, RandomSource(7).generator(), backend=b)),
        ("grow n=1e4 x 2e4", lambda b: model.batch(
            20_000 // scale, RandomSource(7).generator(), backend=b)),
    ]
    print(f"{'kernel':<24}{'cython s':>12}{'python s':>12}{'speedup':>10}  same")
    for name, fn in cases:
        tc, oc = _best(lambda: fn("cython"), args.repeat)
        tp, op = _best(lambda: fn("python"), max(1, args.repeat // 3))
        print(f"{name:<24}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {_same(oc, op)}")


if __name__ == "__main__":
    main()
