"""Benchmark the compiled pair-sweep kernels against the pure NumPy fallback.

Usage:  python3 benchmarks/bench_kernels.py [n]

Builds one Poisson-sampled scheme pair at frequency n (default 20000) per
component, evaluates the product-power pair sums and a set-difference pair
statistic with both backends, and reports timings and agreement.
"""

import sys
import time

import numpy as np

from asynchy import PoissonScheme, generate_scheme
from asynchy import _kernels_py
from asynchy.schemes import interval_windows

try:
    from asynchy import _kernels
except ImportError:
    _kernels = None


def timed(fn, *args, repeat=5):
    best = float("inf")
    value = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return value, best


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
    scheme = generate_scheme(PoissonScheme(n, 1.0, 1.0), 1.0, seed=1)
    t1, t2 = scheme.times1, scheme.times2
    jlo, jhi, n1, jcut = interval_windows(t1, t2, 1.0)
    jhi_cut = np.ascontiguousarray(np.minimum(jhi, jcut), np.int64)
    jlo = np.ascontiguousarray(jlo, np.int64)
    jhi = np.ascontiguousarray(jhi, np.int64)
    rng = np.random.default_rng(2)
    d1 = rng.standard_normal(n1)
    d2 = rng.standard_normal(len(t2) - 1)
    pairs = int(np.maximum(jhi_cut - jlo + 1, 0).sum())
    print(f"scheme: {len(t1) - 1} + {len(t2) - 1} intervals, {pairs} overlapping pairs")

    backends = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels else [])
    cases = [
        ("signed product x*y", "signed_product_pair_sum", (d1, d2, jlo, jhi_cut, 1, 1)),
        ("signed product x^2*y^2", "signed_product_pair_sum", (d1, d2, jlo, jhi_cut, 2, 2)),
        ("absolute product |x|^1.5*|y|^0.5", "abs_product_pair_sum", (d1, d2, jlo, jhi_cut, 1.5, 0.5)),
        ("set-difference statistic (2,0,4)", "pair_stat_terms", (t1, t2, jlo, jhi, 1.0, 0.0, 1.0, True)),
    ]
    for label, fn_name, args in cases:
        print(f"\n{label}")
        reference = None
        ref_time = None
        for name, mod in backends:
            value, secs = timed(getattr(mod, fn_name), *args)
            scalar = value if np.isscalar(value) else float(np.sum(value[1]))
            line = f"  {name:7s} {secs * 1e3:9.3f} ms   value={scalar:.12g}"
            if reference is None:
                reference, ref_time = scalar, secs
            else:
                rel = abs(scalar - reference) / max(abs(reference), 1e-300)
                line += f"   speedup={ref_time / secs:6.1f}x   rel_diff={rel:.1e}"
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
