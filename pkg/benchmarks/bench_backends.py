"""Compare the compiled and pure-Python kernels on representative workloads.

Run with ``python3 benchmarks/bench_backends.py``. Results from both
backends are checked for equality before timings are reported.
"""
import argparse
import time

import numpy as np

from nonlocal_geom import _accel
from nonlocal_geom.density import sparse_point_measure
from nonlocal_geom.sets import SparseDust, UnionOfBoxes


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_nearest(impls, n_centers, n_points, repeat):
    rng = np.random.default_rng(0)
    centers = rng.uniform(-1, 1, (n_centers, 2))
    points = rng.uniform(-1, 1, (n_points, 2))
    cell = 4.0 / np.sqrt(n_centers)
    res = {}
    for name, impl in impls.items():
        idx = _accel.CenterIndex(centers, cell, impl=impl)
        res[name] = _best(lambda: idx.nearest(points), repeat)
    return res


def bench_disks(impls, side, n_queries, radius, repeat):
    rng = np.random.default_rng(1)
    mask = rng.random((side, side)) < 0.05
    queries = rng.integers(radius, side - radius, (n_queries, 2))
    span = np.arange(-radius, radius + 1)
    grid = np.stack(np.meshgrid(span, span, indexing="ij"), -1).reshape(-1, 2)
    offsets = grid[np.linalg.norm(grid, axis=1) <= radius]
    return {name: _best(lambda: _accel.disk_counts(mask, queries, offsets, impl=impl), repeat)
            for name, impl in impls.items()}


def bench_dust(impls, n_points, repeat):
    dust = SparseDust(2, 0.01, 2.0 ** -8, seed=7)
    points = np.random.default_rng(2).uniform(-1, 1, (n_points, 2))
    res = {}
    for name, impl in impls.items():
        idx = _accel.CenterIndex(dust.centers, dust.cell, impl=impl)
        res[name] = _best(lambda: idx.nearest(points), repeat)
    return res


def bench_sparse_raster(impls, grid, repeat):
    E = UnionOfBoxes(2, [[0.1, 0.1], [-0.3, 0.05]], [[0.2, 0.3], [-0.1, 0.1]])
    return {name: _best(lambda: np.array([sparse_point_measure(
        E, 1.0, 0.05, 2.0 / grid, method="raster", impl=impl).measure_dalpha]), repeat)
        for name, impl in impls.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = _accel.backends()
    if "compiled" not in impls:
        print("compiled backend unavailable; timing the Python fallback only")
    cases = [
        ("dust membership lookup, 400k points", bench_dust(impls, 400_000, args.repeat)),
        ("sparse-point raster brute force, 256^2 grid",
         bench_sparse_raster(impls, 256, args.repeat)),
        ("nearest_center 400 centres x 200k points",
         bench_nearest(impls, 400, 200_000, args.repeat)),
        ("nearest_center 20k centres x 200k points",
         bench_nearest(impls, 20_000, 200_000, args.repeat)),
        ("disk_counts 512^2 raster, 4k queries, radius 16",
         bench_disks(impls, 512, 4000, 16, args.repeat)),
        ("disk_counts 512^2 raster, 1k queries, radius 64",
         bench_disks(impls, 512, 1000, 64, args.repeat)),
    ]
    print(f"{'case':<50}{'backend':>10}{'seconds':>11}{'speedup':>9}")
    for label, res in cases:
        outs = [out for _, out in res.values()]
        for other in outs[1:]:
            a = outs[0] if isinstance(outs[0], tuple) else (outs[0],)
            b = other if isinstance(other, tuple) else (other,)
            assert all(np.array_equal(x, y) for x, y in zip(a, b)), f"backends disagree: {label}"
        base = res["python"][0]
        for name, (sec, _) in res.items():
            print(f"{label:<50}{name:>10}{sec:>11.4f}{base / sec:>8.1f}x")


if __name__ == "__main__":
    main()
