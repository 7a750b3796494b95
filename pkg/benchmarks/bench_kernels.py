"""Compare the compiled and pure-Python radial kernels.

    python benchmarks/bench_kernels.py [--sizes 250 1000 4000] [--repeat 5]

Reports the best wall time of a full ``eigen_mu`` solve and of a single
tridiagonal Poisson solve for each implementation, plus the speed-up.
"""

import argparse
import timeit

import numpy as np

from plateopt import kernels
from plateopt.grid import build_radial_grid, solve_poisson
from plateopt.spectral import eigen_lambda, eigen_mu


def bench(impl, grid, repeat):
    kernels.use(impl)
    rho = np.where(grid.r < 0.5, 1.0, 0.0)
    f = grid.function(np.ones(grid.size))
    cases = {
        "eigen_mu": lambda: eigen_mu(grid, 1.0),
        "eigen_lambda": lambda: eigen_lambda(grid, 0.5, rho),
        "poisson": lambda: solve_poisson(grid, f),
    }
    out = {}
    for name, fn in cases.items():
        fn()
        out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 1000, 4000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_impl is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    print(f"{'N':>6} {'case':>13} {'cython [ms]':>12} {'python [ms]':>12} {'speed-up':>9}")
    for n in args.sizes:
        grid = build_radial_grid(1.0, n)
        fast = bench("cython", grid, args.repeat)
        slow = bench("python", grid, args.repeat)
        for case in fast:
            print(f"{n:>6} {case:>13} {1e3 * fast[case]:>12.3f} {1e3 * slow[case]:>12.3f} "
                  f"{slow[case] / fast[case]:>8.1f}x")
    kernels.use("cython")


if __name__ == "__main__":
    main()
