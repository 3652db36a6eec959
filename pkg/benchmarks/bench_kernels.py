"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--sizes 200 600 1200] [--repeat 3]

Both paths are imported side by side, so the environment flag is not needed.
Results of the two paths are compared before timing.
"""
import argparse
import timeit

import numpy as np

from kpzeternal.kernels import KERNELS


def cases(size, rng):
    w = rng.standard_exponential((size, size))
    g = KERNELS["passage_table"][1](w)
    ys = np.linspace(-4.0, 4.0, 8 * size + 1)
    f = np.abs(ys)
    xs = np.linspace(-2.0, 2.0, size)
    return {
        "passage_table": (w,),
        "backtrack": (g, size - 1, size - 1),
        "quadratic_sup": (f, ys, xs, 1.0, 1e-12),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 600, 1200])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<15}{'size':>6}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for size in args.sizes:
        for name, call_args in cases(size, rng).items():
            fast, slow = KERNELS[name]
            if not same(fast(*call_args), slow(*call_args)):
                raise SystemExit(f"{name}: numba and numpy disagree at size {size}")
            t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
            t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
            print(f"{name:<15}{size:>6}{t_fast:>12.5f}{t_slow:>12.5f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
