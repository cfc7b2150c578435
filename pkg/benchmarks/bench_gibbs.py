"""Time the Gibbs kernel on the compiled and pure-Python backends.

    python benchmarks/bench_gibbs.py --spins 10 --reads 2000
"""
import argparse
import time

import numpy as np

from boltzbench import _backend, _fallback
from boltzbench.ising import random_model
from boltzbench.samplers import SamplerConfig, gibbs_sample


def bench(model, backend, config, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        ss = gibbs_sample(model, 1.0, config, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, ss


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spins", type=int, nargs="+", default=[10, 40])
    ap.add_argument("--density", type=float, default=0.5)
    ap.add_argument("--reads", type=int, default=2000)
    ap.add_argument("--sweeps", type=int, default=10)
    ap.add_argument("--burn-in", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _backend.compiled is None:
        print("compiled kernels unavailable; only the fallback can run")
    cfg = SamplerConfig(seed=0, num_reads=args.reads, sweeps_per_read=args.sweeps, burn_in_sweeps=args.burn_in)
    print(f"{'N':>4} {'updates':>10} {'python s':>10} {'cython s':>10} {'speedup':>8} identical")
    for n in args.spins:
        m = random_model(n, args.density, rng=np.random.default_rng(n))
        updates = n * (args.burn_in + args.reads * args.sweeps)
        t_py, ss_py = bench(m, _fallback, cfg, args.repeat)
        if _backend.compiled is None:
            print(f"{n:>4} {updates:>10} {t_py:>10.3f} {'-':>10} {'-':>8} -")
            continue
        t_c, ss_c = bench(m, _backend.compiled, cfg, args.repeat)
        print(f"{n:>4} {updates:>10} {t_py:>10.3f} {t_c:>10.4f} {t_py / t_c:>7.0f}x {ss_py == ss_c}")


if __name__ == "__main__":
    main()
