"""Timing of the compiled tuple accumulator against the pure-Python one.

    python3 benchmarks/bench_tuples.py --n 7 --orders 2 3 4 --repeat 3
"""
import argparse
import time

import numpy as np

from loschmidt import ChainSpec, mode_table
from loschmidt.kernels import accumulate_compiled, accumulate_python


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=7)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--h", type=float, default=0.5026)
    ap.add_argument("--orders", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    modes = mode_table(ChainSpec(args.n, args.gamma, args.h))
    data = (modes.theta, modes.cls, modes.cls_energy)
    print(f"N={args.n} gamma={args.gamma} h={args.h}")
    print(f"{'order':>5} {'tuples':>8} {'python [s]':>11} {'compiled [s]':>13} {'speedup':>8} {'max diff':>9}")
    for n in args.orders:
        tp, ap_ = best_of(lambda: accumulate_python(*data, n, 0, modes.n), args.repeat)
        if accumulate_compiled is None:
            print(f"{n:>5} {modes.n ** n:>8} {tp:>11.4f} {'n/a':>13}")
            continue
        tc, ac = best_of(lambda: accumulate_compiled(*data, n, 0, modes.n), args.repeat)
        diff = float(np.max(np.abs(ap_ - ac)))
        print(f"{n:>5} {modes.n ** n:>8} {tp:>11.4f} {tc:>13.5f} {tp / tc:>8.1f} {diff:>9.1e}")


if __name__ == "__main__":
    main()
