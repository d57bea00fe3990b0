"""Time the reservoir recurrence on the compiled and numpy backends.

    python3 benchmarks/bench_kernels.py [--sizes 20 80 320] [--steps 6300] [--repeat 5]

Each size runs one trial-length trajectory (transient + train + test steps by
default) through every available backend and reports the best of
``--repeat`` runs together with the max deviation from the numpy result.
"""

import argparse
import timeit

import numpy as np

from ortho_esn import kernels
from ortho_esn.matrixgen import ConnectivitySpec, Kind, generate


def bench(k, steps, repeat, rng):
    W = np.ascontiguousarray(generate(ConnectivitySpec(Kind.ORTHOGONAL, k, seed=k)).entries)
    drive = np.ascontiguousarray(0.3 * rng.uniform(-0.5, 0.5, (steps, k)))
    x0 = np.zeros(k)
    ref = kernels.get_backend("python").drive_states(W, drive, x0)
    out = {}
    for name in kernels.available_backends():
        fn = kernels.get_backend(name).drive_states
        dev = float(np.max(np.abs(np.asarray(fn(W, drive, x0)) - ref)))
        best = min(timeit.repeat(lambda: fn(W, drive, x0), number=1, repeat=repeat))
        out[name] = (best, dev)
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[20, 80, 160, 320, 640])
    parser.add_argument("--steps", type=int, default=6300)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    names = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}; steps per run: {args.steps}")
    print(f"{'k':>6} " + " ".join(f"{n + ' [ms]':>14}" for n in names) + f" {'speedup':>8} {'max dev':>9}")
    for k in args.sizes:
        res = bench(k, args.steps, args.repeat, rng)
        times = " ".join(f"{1e3 * res[n][0]:14.2f}" for n in names)
        speedup = res["python"][0] / res["cython"][0] if "cython" in res else float("nan")
        dev = max(d for _, d in res.values())
        print(f"{k:>6} {times} {speedup:8.2f} {dev:9.1e}")


if __name__ == "__main__":
    main()
