"""Time the numba and numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both paths are called directly from the kernel tables, so a single process
covers both regardless of DLMSEARCH_DISABLE_JIT. Outputs are checked equal.
"""

import argparse
import time

import numpy as np

from dlmsearch import kernels as K
from dlmsearch.rng import derive, seed_key


def _inputs(rng):
    keys = derive(seed_key(1)[0], np.arange(20_000))
    raw = rng.dirichlet(np.ones(8), size=20_000)
    xi = raw[0] * 6
    u_batch = rng.random((20_000, 8))
    probs = rng.dirichlet(np.ones(32), size=200_000)
    u = rng.random(200_000)
    tokens = rng.integers(0, 32, size=(20_000, 16))
    patterns = rng.permutation(32)[:8].reshape(2, 4)
    return {
        "uniforms": (keys, 16),
        "ssp_batch": (xi, u_batch),
        "inverse_cdf": (probs, u),
        "prefix_match": (tokens, patterns),
    }


def _time(fn, args, repeat):
    fn(*args)  # warm-up (includes compilation for the jitted path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    inputs = _inputs(np.random.default_rng(0))
    print(f"{'kernel':<14} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, call in inputs.items():
        a = K.NUMPY_KERNELS[name](*call)
        b = K.NUMBA_KERNELS[name](*call)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.array_equal(x, y), name
        tn = _time(K.NUMPY_KERNELS[name], call, args.repeat)
        tb = _time(K.NUMBA_KERNELS[name], call, args.repeat)
        print(f"{name:<14} {tn * 1e3:>10.2f} {tb * 1e3:>10.2f} {tn / tb:>7.1f}x")


if __name__ == "__main__":
    main()
