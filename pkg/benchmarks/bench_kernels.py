"""Time the interference-map kernel on both backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--signal 2001] [--theta 401]

Prints the best wall time per backend and the largest relative difference
between their maps.
"""

import argparse
import timeit

import numpy as np

from qsup import kernels
from qsup.config import RunConfig
from qsup.interferometer import SampleTransmissivity, build_map


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--signal", type=int, default=2001, help="signal grid points")
    ap.add_argument("--theta", type=int, default=401, help="angle grid points")
    args = ap.parse_args(argv)

    geom = RunConfig.from_dict({}).geometry()
    ls = np.linspace(732.0, 743.0, args.signal)
    th = np.linspace(-1.0, 1.0, args.theta)
    tau = SampleTransmissivity.flat(0.5)
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])

    maps, best = {}, {}
    for b in backends:
        maps[b] = build_map(geom, tau, ls, th, backend=b).intensity
        t = timeit.repeat(lambda: build_map(geom, tau, ls, th, backend=b), number=1, repeat=args.repeat)
        best[b] = min(t)
        print(f"{b:7s} {args.signal}x{args.theta}: {best[b] * 1e3:8.1f} ms")
    if len(backends) == 2:
        a, c = maps["python"], maps["cython"]
        diff = np.max(np.abs(a - c)) / np.max(np.abs(a))
        print(f"speed-up {best['python'] / best['cython']:.1f}x, max relative difference {diff:.2g}")
    else:
        print("compiled kernels not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
