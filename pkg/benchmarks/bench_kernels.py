"""Timing of the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--rows 20000]

Both backends are imported directly, so the environment switch
``TAILCLUSTER_PURE`` does not matter here.  Results are checked for agreement
(to rounding) before anything is timed.
"""
from __future__ import annotations

import argparse
import time
import timeit

import numpy as np

from tailcluster import _kernels_py

try:
    from tailcluster import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def _path_stats_case(rows: int, width: int, rng: np.random.Generator):
    x = rng.pareto(1.0, size=(rows, width)) * (rng.random((rows, width)) < 0.5)
    return (x, 1.0, 0.5, 1.0, width // 2)


def _dehaan_case(rows: int, k: int, chunk: int, rng: np.random.Generator):
    def make():
        m = np.zeros((rows, k))
        gamma = np.zeros(rows)
        incr = rng.standard_exponential((rows, chunk))
        z = rng.exponential(size=(rows, chunk, k))
        return m, gamma, incr, z, 1.0, np.full(rows, 50.0)

    return make


def _same(a, b) -> bool:
    # sums may differ in the last bits because the loops add in another order
    return all(np.allclose(u, v, rtol=1e-12, atol=0) for u, v in zip(a, b))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rows", type=int, default=20_000)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not available; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    rows = args.rows

    print(f"{'kernel':<28}{'numpy [ms]':>12}{'cython [ms]':>13}{'speed-up':>10}")
    for width in (17, 65, 257):
        case = _path_stats_case(rows, width, rng)
        if not _same(_kernels_py.path_stats(*case), _kernels_c.path_stats(*case)):
            raise SystemExit(f"path_stats backends disagree (width {width})")
        tp = min(timeit.repeat(lambda: _kernels_py.path_stats(*case), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: _kernels_c.path_stats(*case), number=1, repeat=args.repeat))
        print(f"{f'path_stats P={width}':<28}{tp * 1e3:>12.2f}{tc * 1e3:>13.2f}{tp / tc:>9.1f}x")

    for k in (1, 3, 9):
        make = _dehaan_case(rows, k, 16, rng)
        base = make()
        a = tuple(np.copy(v) if isinstance(v, np.ndarray) else v for v in base)
        b = tuple(np.copy(v) if isinstance(v, np.ndarray) else v for v in base)
        ra, rb = _kernels_py.dehaan_update(*a), _kernels_c.dehaan_update(*b)
        if not (_same(ra, rb) and _same(a[:2], b[:2])):
            raise SystemExit(f"dehaan_update backends disagree (k {k})")

        def best(mod):
            # the kernel works in place, so every repeat gets fresh copies
            times = []
            for _ in range(args.repeat):
                fresh = tuple(np.copy(v) if isinstance(v, np.ndarray) else v for v in base)
                t0 = time.perf_counter()
                mod.dehaan_update(*fresh)
                times.append(time.perf_counter() - t0)
            return min(times)

        tp, tc = best(_kernels_py), best(_kernels_c)
        print(f"{f'dehaan_update k={k}':<28}{tp * 1e3:>12.2f}{tc * 1e3:>13.2f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
