"""Time the forward sweep with and without the compiled kernel.

The oscillator model is the one with a compiled sweep, so it is the
one benchmarked.  Run from a checkout or an installed environment:

    python3 benchmarks/bench_sweeps.py --repeats 20

If the extension failed to build (or ONESHOT_PURE_PYTHON is set) both
columns time the same pure-Python path; the backend line says so.
"""

import argparse
import time

import numpy as np

from oneshot_unsteady import VanDerPolModel, make_time_grid, march_init, sweep_H
from oneshot_unsteady import _kernels


def best_sweep_time(traj, u, model, use_kernels, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        sweep_H(traj, u, model, p_scale=2.0, use_kernels=use_kernels)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[256, 1024, 4096, 16384],
                        help="time step counts to benchmark")
    parser.add_argument("--repeats", type=int, default=20,
                        help="repetitions per measurement (best is kept)")
    parser.add_argument("--horizon", type=float, default=20.0,
                        help="time horizon T")
    args = parser.parse_args(argv)

    model = VanDerPolModel()
    u = np.array([1.0])
    print(f"kernel backend: {_kernels.backend()}")
    header = f"{'N':>8} {'python (ms)':>14} {'kernel (ms)':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in args.sizes:
        grid = make_time_grid(args.horizon, n)
        traj = march_init(model, grid, u, p_scale=2.0)
        t_py = best_sweep_time(traj, u, model, False, args.repeats)
        t_k = best_sweep_time(traj, u, model, True, args.repeats)
        print(f"{n:>8} {1e3 * t_py:>14.3f} {1e3 * t_k:>14.3f} {t_py / t_k:>8.1f}x")


if __name__ == "__main__":
    main()
