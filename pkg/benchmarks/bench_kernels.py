"""Time the numba and numpy flavours of the hot kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  One warm-up
call per flavour is made first so numba compilation is not counted.
"""
import argparse
import timeit

import numpy as np

from translab import _accel, curves, kernels, planes, topo, zoo


def cases():
    circ = curves.circle(1.0, 512).points
    prof = zoo.rotational_profile("paraboloid", s_max=10.0, step=1e-3)
    mesh = topo.cap_ends(zoo.revolve(prof, 64, 32, height=3.0)[1], sigma=0.1).mesh
    rng = np.random.default_rng(0)
    bins = rng.integers(0, 4096, 200_000)
    vals = rng.normal(size=bins.size)
    return {
        "polyline_crossing (512 pts)": lambda: kernels.polyline_crossing(circ),
        "binned_minmax (200k into 4096)": lambda: kernels.binned_minmax(bins, vals, 4096),
        "alexandrov_sweep (capped paraboloid)": lambda: planes.alexandrov_sweep(mesh, theta=0.3),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    flavours = [False] + ([True] if _accel.HAVE_NUMBA else [])
    print(f"{'case':40s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        best = {}
        for flag in flavours:
            kernels.USE_NUMBA = flag
            fn()
            best[flag] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        nb = best.get(True)
        row = f"{name:40s} {1e3 * best[False]:11.3f} "
        row += f"{1e3 * nb:11.3f} {best[False] / nb:8.1f}" if nb else f"{'n/a':>11s} {'':>8s}"
        print(row)
    kernels.USE_NUMBA = _accel.USE_NUMBA


if __name__ == "__main__":
    main()
