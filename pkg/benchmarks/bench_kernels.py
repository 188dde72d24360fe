"""Compare the compiled RK4 kernel with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps N] [--batch B] [--repeat R]

Reports wall time per call, integration steps per second, and checks that
the two backends produce identical trajectories.
"""
import argparse
import timeit

import numpy as np

from gyrostab import _kernels_py
from gyrostab.gyrostat import GyrostatParams
from gyrostab.numerics import GyrostatField

try:
    from gyrostab import _kernels
except ImportError:
    _kernels = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--batch", type=int, nargs="+", default=[1, 16, 256])
    args = ap.parse_args()

    p = GyrostatParams(3.0, 2.0, 1.0, (1.0, 0.0, 0.0))
    kargs = GyrostatField(p).kernel_args()
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{'batch':>6} {'backend':>9} {'time [s]':>10} {'steps/s':>12}")
    for n in args.batch:
        X = np.ascontiguousarray(rng.normal(size=(n, 6)))
        results = {}
        for name, kern in backends:
            call = lambda: kern.rk4_gyrostat(X, *kargs, 1e-3, args.steps, args.steps)
            t = min(timeit.repeat(call, number=1, repeat=args.repeat))
            results[name] = (t, call()[0])
            print(f"{n:>6} {name:>9} {t:>10.4f} {n * args.steps / t:>12.3e}")
        if len(results) == 2:
            same = np.array_equal(results["python"][1], results["compiled"][1])
            speed = results["python"][0] / results["compiled"][0]
            print(f"{'':>6} speedup {speed:.1f}x, identical output: {same}")


if __name__ == "__main__":
    main()
