"""Times the thinning kernels: compiled core vs pure-python fallback,
exact intensity recomputation vs sum-of-exponentials updates.

Run:  python3 benchmarks/bench_engines.py [--reps 5]
"""

import argparse
import time

import numpy as np

from hawkes_impact import engine
from hawkes_impact.common import stream
from hawkes_impact.hawkes import soe_fit
from hawkes_impact.kernels import POWER_LAW, KernelSpec

CASES = [
    ("moderate (aT=0.90, T=150)", dict(mu=1.0, a=0.90, horizon=150.0)),
    ("near-critical (aT=0.98, T=1e4)", dict(mu=5e-3, a=0.98, horizon=1e4)),
]


def bench(fn, reps):
    best = np.inf
    events = 0
    for r in range(reps):
        gen = stream(1234, r)
        t0 = time.perf_counter()
        out = fn(gen)
        best = min(best, time.perf_counter() - t0)
        events = len(out)
    return best, events


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()

    spec = KernelSpec(POWER_LAW, alpha=0.5)
    backends = engine.available_backends()
    print(f"available backends: {', '.join(backends)} (active: {engine.BACKEND})\n")
    header = f"{'case':<32} {'backend':<8} {'engine':<6} {'best time':>10} {'events':>8}"
    print(header)
    print("-" * len(header))
    for label, cfg in CASES:
        soe = soe_fit(spec, 16, cfg["horizon"])
        w = np.ascontiguousarray(soe.weights)
        r = np.ascontiguousarray(soe.rates)
        for name, impl in backends.items():
            t, n = bench(lambda g: impl.thin_exact(
                cfg["mu"], cfg["a"], cfg["horizon"], engine.FAMILY_POWER, 0.5, g),
                args.reps)
            print(f"{label:<32} {name:<8} {'exact':<6} {t * 1e3:>8.1f}ms {n:>8}")
            t, n = bench(lambda g: impl.thin_soe(
                cfg["mu"], cfg["a"], cfg["horizon"], w, r, g), args.reps)
            print(f"{label:<32} {name:<8} {'soe':<6} {t * 1e3:>8.1f}ms {n:>8}")
        print()


if __name__ == "__main__":
    main()
