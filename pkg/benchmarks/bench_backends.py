"""Time the compiled and numpy path kernels on the same keys.

    python3 benchmarks/bench_backends.py --paths 2000 --horizon 10000
"""

import argparse
import time

import numpy as np

from subordest import rng as srng
from subordest._backend import compiled_kernels
from subordest.simulate import simulate_batch
from subordest.special import EstimationFrame


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--betas", default="0.2,0.5,0.9")
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--horizon", type=float, default=1e4)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--lengths", action="store_true", help="also keep all increments")
    args = p.parse_args()

    if compiled_kernels is None:
        raise SystemExit("compiled kernels are not built; run: pip install -e . --no-build-isolation")
    frame = EstimationFrame(args.delta, args.horizon)
    keys = srng.path_keys(0, args.paths)
    print(f"{'beta':>5} {'draws':>11} {'cython s':>9} {'python s':>9} {'speedup':>8} {'Mdraw/s':>8}")
    for beta in (float(b) for b in args.betas.split(",")):
        tc, a = best_of(lambda: simulate_batch(beta, frame, keys, args.lengths, backend="cython"), args.repeat)
        tp, b = best_of(lambda: simulate_batch(beta, frame, keys, args.lengths, backend="python"), args.repeat)
        if not np.array_equal(a.counts, b.counts):
            raise SystemExit(f"backends disagree at beta={beta}")
        draws = int(a.counts.sum() + a.counts.size)
        print(f"{beta:5.2f} {draws:11d} {tc:9.3f} {tp:9.3f} {tp / tc:8.1f} {draws / tc / 1e6:8.1f}")


if __name__ == "__main__":
    main()
