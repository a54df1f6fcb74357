"""Time each kernel under the compiled and the numpy backends.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from pql import kernels
from pql.bounds import random_hyperplanes
from pql.rng import Tag, stream_keys


def cases():
    rng = np.random.default_rng(0)
    T = 4096
    keys = stream_keys(1, np.arange(T), Tag.CHANNEL)
    x1 = rng.random(T)
    x2 = rng.random((T, 2))
    Q, _ = kernels.get_backend("python").replicated_bisection(x1, 4, 10)
    mask = rng.random(Q.shape) < 0.8
    off, axes, _ = kernels.get_backend("python").replicated_bisection_nd(x2, 2, 6)
    w = kernels.get_backend("python").tally_points(Q, mask, 16).astype(float)
    u = rng.random(T)
    A, b = random_hyperplanes(2000, 3, rng)
    return {
        "raw_block": lambda k: k.raw_block(keys, 0, 43),
        "replicated_bisection": lambda k: k.replicated_bisection(x1, 4, 10),
        "replicated_bisection_nd": lambda k: k.replicated_bisection_nd(x2, 2, 6),
        "tally_points": lambda k: k.tally_points(Q, mask, 16),
        "tally_axis_hyperplanes": lambda k: k.tally_axis_hyperplanes(off, axes, np.ones(off.shape, bool), 8, 2),
        "proportional_pick": lambda k: k.proportional_pick(w, u),
        "hyperplane_cell_hits": lambda k: k.hyperplane_cell_hits(A, b, 8),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = kernels.available_backends()
    mods = {n: kernels.get_backend(n) for n in names}
    print(f"{'kernel':<26}" + "".join(f"{n + ' ms':>14}" for n in names) + ("      speedup" if len(names) > 1 else ""))
    for name, fn in cases().items():
        times = {n: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) * 1e3 for n, m in mods.items()}
        line = f"{name:<26}" + "".join(f"{times[n]:>14.3f}" for n in names)
        if len(names) > 1:
            line += f"{times['python'] / times['cython']:>12.1f}x"
        print(line)


if __name__ == "__main__":
    main()
