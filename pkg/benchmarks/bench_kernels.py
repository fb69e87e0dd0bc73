#!/usr/bin/env python
"""Compare the numba kernels against their pure-numpy mirrors.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 8 16 46 --repeats 5 --output bench.json

Every case runs both backends on the same input, checks that the results
agree, and reports the median wall time of each.
"""

import argparse
import json
import platform
import statistics
import sys
import time

import numpy as np

from kgbounds import _kernels_np as np_impl
from kgbounds import kernels  # noqa: F401  (installs the TBB warning filter)

try:
    from kgbounds import _kernels_jit as jit
except ImportError:
    sys.exit("numba is not available; nothing to compare against")


def timed(fn, repeats):
    out = fn()  # also absorbs compilation on the first call
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def case_signs(m, rng):
    M = rng.standard_normal((m, m))
    A0 = rng.choice([-1.0, 1.0], size=(64, m))
    return lambda k: k.alternate_signs(M, A0.copy(), 10**4), lambda a, b: np.allclose(a[0], b[0])


def case_vectors(m, rng):
    M = rng.standard_normal((m, m))
    A0 = rng.standard_normal((50, m, 2))
    A0 /= np.linalg.norm(A0, axis=2, keepdims=True)
    return lambda k: k.alternate_vectors(M, A0.copy(), 100, 1e-7), lambda a, b: np.allclose(a[0], b[0])


def case_brute(m, rng):
    M = rng.integers(-9, 10, size=(min(m, 18), m)).astype(np.int64)

    def run(k):
        cand = np.zeros((16, M.shape[0]), dtype=np.int8)
        return k.brute_force(M, 0.0, True, cand)

    return run, lambda a, b: a[0] == b[0]


def case_pairwise(m, rng):
    V = rng.standard_normal((4 * m, m * m))
    t = 0.3 * rng.standard_normal(m * m)
    K, c = V @ V.T, V @ t
    w0 = rng.dirichlet(np.ones(len(V)))

    def run(k):
        w = w0.copy()
        buf = np.empty(20000)
        n = k.pairwise_sweep(K, K @ w - c, w, 1e-12, len(buf), 0.0, 1e-12, buf)
        return n, w

    return run, lambda a, b: a[0] == b[0] and np.allclose(a[1], b[1])


CASES = {
    "alternate_signs": case_signs,
    "alternate_vectors": case_vectors,
    "brute_force": case_brute,
    "pairwise_sweep": case_pairwise,
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--cases", nargs="+", choices=sorted(CASES), default=sorted(CASES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", help="write the rows as JSON")
    args = ap.parse_args(argv)

    rows = []
    print(f"{'kernel':<18} {'m':>4} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8}  agree")
    for name in args.cases:
        for m in args.sizes:
            rng = np.random.default_rng([args.seed, m])
            run, same = CASES[name](m, rng)
            tj, rj = timed(lambda: run(jit), args.repeats)
            tn, rn = timed(lambda: run(np_impl), args.repeats)
            ok = bool(same(rj, rn))
            rows.append({"kernel": name, "m": m, "numba_s": tj, "numpy_s": tn, "speedup": tn / tj, "agree": ok})
            print(f"{name:<18} {m:>4} {1e3 * tj:>11.2f} {1e3 * tn:>11.2f} {tn / tj:>7.1f}x  {ok}")

    if args.output:
        meta = {"python": platform.python_version(), "numpy": np.__version__, "machine": platform.machine()}
        with open(args.output, "w") as fh:
            json.dump({"meta": meta, "rows": rows}, fh, indent=1)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
