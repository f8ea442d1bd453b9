"""Compare the compiled kernels against the numpy fallback.

Times nearest-distance and parity queries on a Koch prefractal boundary
and checks that both backends return bit-identical answers.

    python3 benchmarks/bench_kernels.py --level 7 --points 200000
"""

import argparse
import time

import numpy as np

from fraclab import kernels
from fraclab.geometry import koch_prefractal


def best_of(fn, repeats):
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=7)
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    kd = koch_prefractal(args.level)
    idx = kd.index
    g = np.random.default_rng(args.seed)
    x0, y0, x1, y1 = kd.bbox
    pts = np.column_stack([
        x0 + (x1 - x0) * g.random(args.points),
        y0 + (y1 - y0) * g.random(args.points),
    ])

    print(f"koch level {args.level}: {idx.n} segments, {args.points} query points")
    if kernels._core is None:
        print("compiled extension not built; timing the numpy fallback only")
        t = best_of(lambda: idx.distance(pts, backend="python"), args.repeats)
        print(f"distance  python   {t * 1e3:9.1f} ms")
        t = best_of(lambda: idx.inside(pts, backend="python"), args.repeats)
        print(f"parity    python   {t * 1e3:9.1f} ms")
        return

    # warm up both paths (the compiled distance seeds a coarse grid lazily)
    d_c = idx.distance(pts, backend="compiled")
    d_p = idx.distance(pts, backend="python")
    in_c = idx.inside(pts, backend="compiled")
    in_p = idx.inside(pts, backend="python")
    same = np.array_equal(d_c, d_p) and np.array_equal(in_c, in_p)
    print(f"backends bit-identical: {same}")
    if not same:
        raise SystemExit("backend mismatch; benchmark numbers would be meaningless")

    rows = []
    for name, fn_c, fn_p in [
        ("distance", lambda: idx.distance(pts, backend="compiled"),
         lambda: idx.distance(pts, backend="python")),
        ("parity", lambda: idx.inside(pts, backend="compiled"),
         lambda: idx.inside(pts, backend="python")),
    ]:
        tc = best_of(fn_c, args.repeats)
        tp = best_of(fn_p, args.repeats)
        rows.append((name, tc, tp))

    print(f"{'query':<10}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for name, tc, tp in rows:
        print(f"{name:<10}{tc * 1e3:>10.1f} ms{tp * 1e3:>10.1f} ms{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
