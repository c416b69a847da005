"""Time the compiled kernels against the NumPy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--n 2500] [--repeat 200]

Reports the median wall time per call for each kernel and for one full
replication step (simulate + fit), then the speedup.
"""

import argparse
import statistics
import time

import numpy as np

from catelab import _fallback
from catelab.dgp import GaussianPairParams

try:
    from catelab import _kernels as compiled
except ImportError:
    compiled = None


def median_time(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def cases(backend, n, rng):
    g = rng.standard_normal((n, 2))
    e = rng.standard_normal(n)
    u = rng.random(n)
    l00, l10, l11 = GaussianPairParams.demo(0.7).cholesky()
    betas = (3.0, 1.0, 0.0, 0.0, 1.0, 1.0)
    sim_args = (g, e, u, 0.0, 0.0, l00, l10, l11, betas, 1.0, 0, 0.5)
    x, _, a, _, _, y, ite = backend.simulate_linear(*sim_args)
    af = a.astype(float)

    def step():
        out = backend.simulate_linear(*sim_args)
        backend.fit_interaction(out[2].astype(float), out[0], out[5])

    return {
        "simulate_linear": lambda: backend.simulate_linear(*sim_args),
        "fit_interaction": lambda: backend.fit_interaction(af, x, y),
        "discordance_stats": lambda: backend.discordance_stats(x, ite),
        "replication step": step,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2500)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args(argv)
    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    fast = cases(compiled, args.n, rng)
    slow = cases(_fallback, args.n, np.random.default_rng(0))
    print(f"n = {args.n}, median of {args.repeat} calls")
    print(f"{'kernel':<20}{'compiled (us)':>15}{'fallback (us)':>15}{'speedup':>10}")
    for name in fast:
        tc = median_time(fast[name], args.repeat) * 1e6
        tf = median_time(slow[name], args.repeat) * 1e6
        print(f"{name:<20}{tc:>15.1f}{tf:>15.1f}{tf / tc:>9.2f}x")


if __name__ == "__main__":
    main()
