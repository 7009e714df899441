"""Compare the compiled stack machine with the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 1000,100000,1000000] [--repeat 5]

Each expression is the right-hand side of a generated problem; timings are
the best of ``--repeat`` runs after one warm-up call.
"""
import argparse
import time

import numpy as np

from ineqcomp.generator import GenConfig, filter_eligible, generate_mix
from ineqcomp.kernels import compile_expr, run_numba, run_numpy
from ineqcomp.problem import load_bundled_seeds


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,100000,1000000")
    ap.add_argument("--problems", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--strict", action="store_true")
    args = ap.parse_args()

    seeds, _ = filter_eligible(load_bundled_seeds())
    problems = generate_mix(seeds, GenConfig.from_preset("all", 3, args.problems))
    rng = np.random.default_rng(0)
    print(f"{'problem':<34}{'ops':>5}{'n':>10}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}")
    for n in (int(s) for s in args.sizes.split(",")):
        for p in problems:
            X = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), size=(n, len(p.variables))))
            prog = compile_expr(p.lhs, p.variables)
            with np.errstate(all="ignore"):
                a = run_numba(prog, X, args.strict)
                b = run_numpy(prog, X, args.strict)
                assert np.allclose(a, b, rtol=1e-12, equal_nan=True), p.id
                tj = best_of(lambda: run_numba(prog, X, args.strict), args.repeat)
                tn = best_of(lambda: run_numpy(prog, X, args.strict), args.repeat)
            print(f"{p.id[:33]:<34}{len(prog.ops):>5}{n:>10}{tj * 1e3:>11.2f}{tn * 1e3:>11.2f}{tn / tj:>8.1f}x")


if __name__ == "__main__":
    main()
