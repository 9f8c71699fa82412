"""Time the planar kernels under numba and under the numpy fallback.

    python3 benchmarks/bench_backends.py [--sizes 1000 10000 100000] [--repeat 3]

The in-process section calls both backend modules directly. The end-to-end
section reruns a full peel in a subprocess with PEELLAB_DISABLE_NUMBA set and
unset, so import-time dispatch is measured too.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from peellab import _kernels, _kernels2d, _kernels2d_np
from peellab._accel import USE_NUMBA


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


E2E = (
    "import time, numpy as np\n"
    "from peellab import peel, PointSet\n"
    "from peellab._accel import backend_name\n"
    "X = np.random.default_rng(0).random(({m}, 2))\n"
    "peel(PointSet(X[:200]))\n"
    "t0 = time.perf_counter(); r = peel(PointSet(X)); dt = time.perf_counter() - t0\n"
    "print(backend_name(), r.n_layers, dt)\n"
)


def end_to_end(m, disable):
    env = dict(os.environ)
    env.pop("PEELLAB_DISABLE_NUMBA", None)
    if disable:
        env["PEELLAB_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", E2E.format(m=m)], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return out[0], int(out[1]), float(out[2])


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000, 100000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not USE_NUMBA:
        print("numba disabled in this process; in-process comparison skipped")
    else:
        rng = np.random.default_rng(1)
        _kernels.peel_2d(rng.random((50, 2)), backend=_kernels2d)  # compile
        _kernels.cone_peel_2d(rng.random((50, 2)) + 0.1, backend=_kernels2d)
        print(f"{'kernel':<10}{'m':>9}{'numba s':>12}{'numpy s':>12}{'speedup':>10}  labels equal")
        for m in args.sizes:
            X = rng.random((m, 2))
            for name, fn in (("peel", _kernels.peel_2d), ("cone_peel", _kernels.cone_peel_2d)):
                a = fn(X, backend=_kernels2d)[0]
                b = fn(X, backend=_kernels2d_np)[0]
                tn = best_of(lambda: fn(X, backend=_kernels2d), args.repeat)
                tp = best_of(lambda: fn(X, backend=_kernels2d_np), args.repeat)
                print(f"{name:<10}{m:>9}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}  {np.array_equal(a, b)}")
    print("\nend to end (subprocess, env flag):")
    for m in args.sizes:
        for disable in (False, True):
            be, nl, dt = end_to_end(m, disable)
            print(f"  m={m:<8} backend={be:<6} layers={nl:<5} {dt:.4f} s")


if __name__ == "__main__":
    main()
