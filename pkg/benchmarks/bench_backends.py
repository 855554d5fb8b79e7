"""Compare the compiled and numpy Monte Carlo backends.

    python3 benchmarks/bench_backends.py [--paths N] [--repeat R]

Both backends read the same counter-based streams, so besides timing we
check that they return identical path outcomes.
"""

import argparse
import time

import numpy as np

from microtrap import model
from microtrap.model import ModelParams, SchemeSpec, SimConfig, simulate_batch

CASES = [
    ("uninsured x=2", lambda p: SchemeSpec.uninsured(p), 2.0),
    ("insured x=3", lambda p: SchemeSpec.insured(p, 0.5, 0.5, mapping="rate"), 3.0),
    ("barrier B=3 x=2", lambda p: SchemeSpec.barrier_scheme(p, 0.5, 0.5, 3.0, mapping="rate"), 2.0),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = ModelParams(r=0.5, lam=1.0, alpha=1.0, x_star=1.0)
    cfg = SimConfig(n_paths=args.paths, t_max=200.0, seed=7)
    backends = ["numpy"] + (["cython"] if model._csim is not None else [])
    print(f"{args.paths} paths, best of {args.repeat}")
    print(f"{'case':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}  match")
    for name, make, x0 in CASES:
        scheme = make(params)
        timings, results = [], []
        for b in backends:
            t, res = best_of(lambda: simulate_batch(params, scheme, x0, cfg, delta=0.1, backend=b),
                             args.repeat)
            timings.append(t)
            results.append(res)
        line = f"{name:<18}" + "".join(f"{t:>11.3f}s" for t in timings)
        if len(results) == 2:
            a, c = results
            same = (np.array_equal(a.trapped, c.trapped)
                    and np.allclose(a.tau, c.tau, rtol=1e-12, equal_nan=True))
            line += f"{timings[0] / timings[1]:>9.1f}x  {'yes' if same else 'NO'}"
        else:
            line += f"{'n/a':>10}  compiled backend missing"
        print(line)


if __name__ == "__main__":
    main()
