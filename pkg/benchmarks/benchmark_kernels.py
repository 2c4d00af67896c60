"""Benchmark the kernel-assembly hot loop: compiled extension vs numpy.

Builds realistic inputs (complex Gaussian node matrix, quadrature weights,
Gaussian decoherence factor) and times dense and banded assembly for a range
of matrix sizes on both backends.

Usage: python3 benchmarks/benchmark_kernels.py [--sizes 256,512,1024]
"""

import argparse
import timeit

import numpy as np

from conjdeco import kernels


def make_inputs(n, m=120, decay=0.05, seed=0):
    rng = np.random.default_rng(seed)
    vt = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    w = rng.uniform(0.1, 1.0, m)
    s = np.arange(-(n - 1), n)
    d = np.exp(-((decay * s) ** 2)).astype(complex)
    live = np.nonzero(np.abs(d) > 1e-18)[0]
    band = int(max(abs(live - (n - 1))))
    return vt, w, d, band


def best_of(fn, repeats=3):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="128,256,512,1024",
                        help="comma-separated matrix sizes")
    parser.add_argument("--nodes", type=int, default=120,
                        help="quadrature node count")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = ["numpy"]
    if kernels.BACKEND == "compiled":
        backends.append("compiled")
    else:
        print("note: compiled extension not available; timing numpy only")

    header = f"{'n':>6} {'variant':>8}" + "".join(
        f" {b + ' [s]':>14}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n in sizes:
        vt, w, d, band = make_inputs(n, m=args.nodes)
        for variant in ("dense", f"banded"):
            times = {}
            for b in backends:
                if variant == "dense":
                    fn = lambda: kernels.weighted_gram_dfactor(vt, w, d, backend=b)
                else:
                    fn = lambda: kernels.banded_gram_dfactor(vt, w, d, band,
                                                             backend=b)
                times[b] = best_of(fn)
            line = f"{n:>6} {variant:>8}" + "".join(
                f" {times[b]:>14.6f}" for b in backends)
            if len(backends) == 2:
                line += f" {times['numpy'] / times['compiled']:>8.2f}x"
            print(line)
        # agreement check so the numbers above compare equal outputs
        a = kernels.weighted_gram_dfactor(vt, w, d, backend=backends[0])
        b = kernels.weighted_gram_dfactor(vt, w, d, backend=backends[-1])
        assert np.abs(a - b).max() < 1e-10


if __name__ == "__main__":
    main()
