"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--frames N] [--repeat R]

Also times a full ``simulate`` run under each backend, since that is where
the Lindley kernel matters in practice.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from distdelay import _kernels_py

try:
    from distdelay import _kernels
except ImportError:
    _kernels = None

SIM_SNIPPET = """
import time
from distdelay import SimConfig, ChannelSpec, QosSpec, simulate, BACKEND
cfg = SimConfig(ChannelSpec(1, 1, 10**1.5), QosSpec(1e-3, eta=2.0), 5.4, frames={frames}, seed=1)
t0 = time.perf_counter(); simulate(cfg); print(BACKEND, time.perf_counter() - t0)
"""


def _cases(frames):
    rng = np.random.default_rng(0)
    inc = rng.normal(-0.05, 1.0, frames)
    q = _kernels_py.lindley(inc)
    thr = np.linspace(0.0, np.quantile(q, 0.999), 30)
    return {
        "lindley": lambda k: k.lindley(inc),
        "tail_counts": lambda k: k.tail_counts(q, thr),
        "hyp1f1_series": lambda k: k.hyp1f1_series(2.0, 1.7, 30.0, 1e-16, 10_000),
    }


def _best(fn, repeat):
    timer = timeit.Timer(fn)
    n, _ = timer.autorange()
    return min(timer.repeat(repeat, n)) / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed")
    print(f"{'kernel':<16}{'python':>12}{'cython':>12}{'speedup':>10}")
    for name, call in _cases(args.frames).items():
        py = _best(lambda: call(_kernels_py), args.repeat)
        if _kernels is None:
            print(f"{name:<16}{py * 1e6:>10.1f}us{'-':>12}{'-':>10}")
            continue
        cy = _best(lambda: call(_kernels), args.repeat)
        print(f"{name:<16}{py * 1e6:>10.1f}us{cy * 1e6:>10.1f}us{py / cy:>9.1f}x")

    # end to end, each backend in a fresh interpreter so the import-time switch applies
    for pure in ("1", "0"):
        env = dict(os.environ, DISTDELAY_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", SIM_SNIPPET.format(frames=args.frames * 5)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"simulate ({args.frames * 5} frames, {out[0]}): {float(out[1]):.3f} s")


if __name__ == "__main__":
    main()
