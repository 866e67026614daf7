"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--m 2000] [--repeat 3]

Both backends see the same inputs; outputs are checked for equality before
timings are reported.
"""
import argparse
import time

import numpy as np

from ilwe import _backend
from ilwe.rng import CounterStream, stream_key
from ilwe.sampling import SamplerParams, YDist, generate_samples, sample_secret

CASES = [
    # (label, n, k, rho, gamma, bound, y_dist)
    ("uniform n=100 k=1", 100, 1, 39, 255, 256, YDist.parse("uniform")),
    ("uniform n=100 k=3", 100, 3, 39, 255, 256, YDist.parse("uniform")),
    ("subgaussian n=100 k=1", 100, 1, 39, None, 256, YDist.parse("subgaussian alpha=29")),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_case(label, n, k, rho, gamma, bound, y_dist, m, repeat):
    gamma = gamma if gamma is not None else bound
    params = SamplerParams(n, k, rho, gamma=gamma, beta=gamma - bound, eta=1, y_dist=y_dist)
    secret = sample_secret(params, CounterStream.from_seed(1))
    key = stream_key(2)
    rows = []
    results = {}
    for name, impl in (("compiled", _backend.compiled), ("fallback", _backend.fallback)):
        if impl is None:
            continue
        sec, batch = best_of(lambda: generate_samples(secret, params, key, m, backend=impl), repeat)

        def absorb():
            t = np.zeros(n, dtype=np.int64)
            u = np.zeros((k, n), dtype=np.int64)
            zz = impl.absorb_samples(batch.c, batch.z, t, u)
            return t, u, int(zz)

        sec_abs, stats = best_of(absorb, repeat)
        results[name] = (batch, stats)
        rows.append((name, sec, sec_abs))
    if len(results) == 2:
        (b1, s1), (b2, s2) = results["compiled"], results["fallback"]
        same = (np.array_equal(b1.c, b2.c) and np.array_equal(b1.z, b2.z)
                and all(np.array_equal(x, y) for x, y in zip(s1[:2], s2[:2])) and s1[2] == s2[2])
        if not same:
            raise SystemExit(f"{label}: backends disagree")
    print(f"{label}, m={m}")
    for name, sec, sec_abs in rows:
        print(f"  {name:<9} sample {sec * 1e3:9.1f} ms   absorb {sec_abs * 1e3:9.1f} ms")
    if len(rows) == 2:
        print(f"  speedup   sample {rows[1][1] / rows[0][1]:8.1f}x    absorb {rows[1][2] / rows[0][2]:8.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _backend.compiled is None:
        print("compiled kernels unavailable; timing the fallback only")
    for case in CASES:
        bench_case(*case, m=args.m, repeat=args.repeat)


if __name__ == "__main__":
    main()
