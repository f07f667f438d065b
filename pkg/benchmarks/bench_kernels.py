"""Time the compiled trial kernel against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--trials N] [--repeat R]

Both backends get identical inputs; the script also checks that they return
the same outcomes before reporting throughput.
"""

import argparse
import math
import time

import numpy as np

from crac import _kernels_py, kernels
from crac.protocol import ProtocolConfig, bob_amplitudes


def best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    cfg = ProtocolConfig(0.0, math.pi / 2, math.pi / 4, "fixed", math.pi / 4)
    u_a, u_b = cfg.unitaries()
    rng = np.random.default_rng(0)
    n = args.trials
    amps = bob_amplitudes(rng.uniform(0, 2 * math.pi, n), rng.integers(0, 2, n))
    r_a, r_b = rng.random(n), rng.random(n)
    call = lambda impl: impl(u_a.entries, u_b.entries, amps, 0.0, math.pi / 2, r_a, r_b)  # noqa: E731

    t_py, out_py = best_of(lambda: call(_kernels_py.sample_outcomes), args.repeat)
    print(f"python  : {t_py:8.4f} s  {n / t_py:12.0f} trials/s")
    if kernels.BACKEND != "cython":
        print("compiled: not built (install with Cython available to enable it)")
        return
    t_c, out_c = best_of(lambda: call(kernels.sample_outcomes), args.repeat)
    same = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
    print(f"compiled: {t_c:8.4f} s  {n / t_c:12.0f} trials/s")
    print(f"speedup : {t_py / t_c:8.1f}x  (outputs identical: {same})")


if __name__ == "__main__":
    main()
