"""Compare the compiled and pure-Python kernel backends.

Times the three hot kernels on random inputs, then a complete preset run
with each backend (in a subprocess, since the backend is chosen at import).

    python3 benchmarks/bench_kernels.py [--size 4096] [--repeat 20] [--preset smooth-logarithmic]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from entroflow._backend import available, load
from entroflow.graphs import ROOT_MAXIT, ROOT_TOL

RUN_SNIPPET = """
import time
from entroflow import config, presets, stepper
from entroflow._backend import BACKEND
cfg = config.loads(presets.get({preset!r}))
t = time.perf_counter()
traj = stepper.run(cfg.problem)
print(BACKEND, time.perf_counter() - t, len(traj.reports))
"""


def kernel_timings(name, size, repeat):
    k = load(name)
    rng = np.random.default_rng(0)
    x = rng.uniform(-10, 10, size)
    lower, upper = rng.uniform(-1, 0, size), rng.uniform(-1, 0, size)
    diag = 3.0 + rng.uniform(0, 1, size)
    cases = {
        "rho_log": lambda: k.rho_log(0.1, x, ROOT_TOL, ROOT_MAXIT),
        "prox regular": lambda: k.prox(0, 0.1, x, ROOT_TOL, ROOT_MAXIT),
        "prox logarithmic": lambda: k.prox(1, 0.1, x, ROOT_TOL, ROOT_MAXIT),
        "tridiag_solve": lambda: k.tridiag_solve(lower, diag, upper, x),
    }
    return {label: min(timeit.repeat(fn, number=1, repeat=repeat)) for label, fn in cases.items()}


def run_timing(name, preset):
    env = dict(os.environ, ENTROFLOW_BACKEND=name)
    out = subprocess.run([sys.executable, "-c", RUN_SNIPPET.format(preset=preset)],
                         env=env, capture_output=True, text=True, check=True)
    backend, seconds, steps = out.stdout.split()
    return float(seconds), int(steps)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=4096, help="points per kernel call")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--preset", default="smooth-logarithmic")
    args = ap.parse_args(argv)

    names = available()
    print(f"backends available: {', '.join(names)}")
    timings = {n: kernel_timings(n, args.size, args.repeat) for n in names}
    labels = list(timings[names[0]])
    print(f"\nkernel times for {args.size} points (best of {args.repeat}), ms")
    print(f"{'kernel':<18s}" + "".join(f"{n:>12s}" for n in names)
          + ("     speedup" if len(names) == 2 else ""))
    for label in labels:
        row = f"{label:<18s}" + "".join(f"{1e3 * timings[n][label]:12.3f}" for n in names)
        if len(names) == 2:
            row += f"{timings['python'][label] / timings['cython'][label]:12.1f}x"
        print(row)

    print(f"\nfull run of preset {args.preset!r}")
    for n in names:
        seconds, steps = run_timing(n, args.preset)
        print(f"{n:<10s} {seconds:8.2f} s  ({steps} steps)")


if __name__ == "__main__":
    main()
