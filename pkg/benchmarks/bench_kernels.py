"""Time the compiled and numpy kernel backends on study-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 20] [--n 50] [--nz 300] [--m 51]

Also times one full KFSD_tri detection under each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from kfsd.kernels import available_backends


def _inputs(n, n_Z, m, seed=0):
    rng = np.random.default_rng(seed)
    Y = np.cumsum(rng.normal(size=(n, m)), axis=1) / np.sqrt(m)
    Z = Y[rng.integers(0, n, n_Z)] + 0.2 * rng.normal(size=(n_Z, m))
    w = np.full(m, 1.0 / (m - 1))
    w[[0, -1]] *= 0.5
    return Y, Z, w


def time_kernels(backend, Y, Z, w, repeat):
    D2yy = backend.sq_dists(Y, Y, w)
    sigma = float(np.sqrt(np.median(D2yy[np.triu_indices(len(Y), 1)])))
    Kyy = np.exp(-D2yy / sigma**2)
    D2zy = backend.sq_dists(Z, Y, w)
    cases = {
        "sq_dists(Z, Y)": lambda: backend.sq_dists(Z, Y, w),
        "kfsd_gaussian(Z | Y)": lambda: backend.kfsd_gaussian(D2zy, Kyy, sigma),
        "band_counts(Z, Y)": lambda: backend.band_counts(Z, Y),
    }
    return {k: min(timeit.repeat(f, number=1, repeat=repeat)) for k, f in cases.items()}


def time_detect(pure, repeat):
    """Seconds per KFSD_tri run, measured in a subprocess so the backend switch applies."""
    code = (
        "import timeit\n"
        "from kfsd import kernels\n"
        "from kfsd.detect import DetectorConfig, kfsd_detect\n"
        "from kfsd.simgen import gen_replication\n"
        "d = gen_replication('MM2', 0.05, 0, 1)\n"
        "f = lambda: kfsd_detect(d.sample, DetectorConfig(), rng=0)\n"
        f"print(kernels.BACKEND, min(timeit.repeat(f, number=1, repeat={repeat})))\n"
    )
    env = dict(os.environ, KFSD_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    name, secs = out.stdout.split()
    return name, float(secs)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--n", type=int, default=50)
    parser.add_argument("--nz", type=int, default=300)
    parser.add_argument("--m", type=int, default=51)
    args = parser.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the numpy fallback is available")
    Y, Z, w = _inputs(args.n, args.nz, args.m)
    results = {name: time_kernels(mod, Y, Z, w, args.repeat) for name, mod in backends.items()}

    print(f"n={args.n} n_Z={args.nz} m={args.m}, best of {args.repeat} (ms)")
    names = sorted(results)
    print(f"{'kernel':<24}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for case in results["python"]:
        row = [results[n][case] * 1e3 for n in names]
        speed = results["python"][case] / results["cython"][case] if "cython" in results else 1.0
        print(f"{case:<24}" + "".join(f"{v:>12.3f}" for v in row) + f"{speed:>9.1f}x")

    print()
    print("full KFSD_tri detection (n=50, m=51, tuned bandwidth)")
    rep = max(1, args.repeat // 4)
    timings = [time_detect(pure, rep) for pure in (True, False)]
    for name, secs in timings:
        print(f"  {name:<8} {secs * 1e3:9.1f} ms")


if __name__ == "__main__":
    main()
