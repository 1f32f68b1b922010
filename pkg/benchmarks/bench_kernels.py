"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--points N] [--repeat R]

Times batch evaluation of a gallery metric with its derivatives, and a long
RK4 integration, on every available backend.  Results of the two backends are
compared as well, so a speedup is never reported for diverging output.
"""

import argparse
import time

import numpy as np

from stackel import gallery
from stackel._kernels import available_backends
from stackel.exprkit import Program, diff, parse


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def eval_case(n_points):
    sd = gallery.load("dupin_cyclide")
    metric = sd.metric()
    exprs = []
    for h in metric.hinv2:
        exprs.append(h)
        exprs.extend(diff(h, c) for c in sd.coords)
    prog = Program(exprs, sd.coords)
    X = sd.samples(n_points, seed=1)
    return lambda backend: prog.evaluate(X, backend=backend), f"eval {len(exprs)} exprs ({len(prog)} instr) x {n_points} pts"


def rk4_case(n_steps):
    f, q = parse("1/w"), parse("-(1 + 1/w^2)")
    prog = Program([f, q], ["w"])
    h = 1.0 / n_steps
    return lambda backend: prog.rk4(1.0, h, n_steps, 1.0, 0.0, backend=backend)[1], f"rk4 {n_steps} steps"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=200000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = available_backends()
    print("backends:", ", ".join(backends))
    for run, label in (eval_case(args.points), rk4_case(args.steps)):
        times, outs = {}, {}
        for b in backends:
            times[b], outs[b] = _best(lambda: run(b), args.repeat)
        line = f"{label:<48}" + "".join(f"  {b} {times[b] * 1e3:9.2f} ms" for b in backends)
        if len(backends) == 2:
            a, b = outs["cython"], outs["python"]
            rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)))
            line += f"  speedup {times['python'] / times['cython']:6.1f}x  max rel diff {rel:.1e}"
        print(line)


if __name__ == "__main__":
    main()
