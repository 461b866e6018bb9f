#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends on synthetic
footprint-extraction workloads.

Usage:
  python3 benchmarks/bench_kernels.py [--repeats 5] [--quick]

The numba path is also what ships by default; run with BIMCHECK_NUMBA=0
to confirm the numpy fallback stands alone.
"""

import argparse
import math
import time

import numpy as np

import bimcheck._kernels as kernels

CUBE_CORNERS = np.array([[x, y, z] for z in (0.0, 1.0)
                         for y in (0.0, 1.0) for x in (0.0, 1.0)])
CUBE_TRIS = np.array([
    [0, 2, 1], [1, 2, 3], [4, 5, 6], [5, 7, 6],
    [0, 1, 4], [1, 5, 4], [2, 6, 3], [3, 6, 7],
    [0, 4, 2], [2, 4, 6], [1, 3, 5], [3, 7, 5],
])


def box_stack_mesh(n_boxes, rng):
    """Triangle soup of n random axis-aligned boxes straddling z = 0.5."""
    sizes = rng.uniform(0.5, 8.0, (n_boxes, 3))
    origins = rng.uniform(0.0, 200.0, (n_boxes, 3))
    origins[:, 2] = rng.uniform(-3.0, 0.4, n_boxes)   # keep the cut inside
    verts = (CUBE_CORNERS[None, :, :] * sizes[:, None, :]
             + origins[:, None, :]).reshape(-1, 3)
    tris = (CUBE_TRIS[None, :, :]
            + 8 * np.arange(n_boxes)[:, None, None]).reshape(-1, 3)
    return verts, tris


def clustered_points(n, rng):
    """Mix of tight clusters and background noise, like sampled footprints."""
    k = max(2, n // 2500)
    centers = rng.uniform(0.0, 120.0, (k, 2))
    per = (n * 4 // 5) // k
    pts = np.vstack([c + rng.normal(0.0, 1.0, (per, 2)) for c in centers])
    noise = rng.uniform(0.0, 120.0, (n - len(pts), 2))
    return np.vstack([pts, noise])


def regular_ring(n_vertices, radius=40.0):
    a = np.linspace(0.0, 2.0 * math.pi, n_vertices, endpoint=False)
    return np.column_stack([radius * np.cos(a), radius * np.sin(a)])


def best_of(fn, repeats):
    fn()                       # warm: numba compiles, caches fill
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_backends(label, make_call, repeats):
    timings = {}
    for name in ("numpy", "numba"):
        if name == "numba" and kernels.backend() != "numba" \
                and not _numba_available():
            timings[name] = None
            continue
        kernels.set_backend(name)
        timings[name] = best_of(make_call, repeats)
    row = f"{label:<42}"
    for name in ("numpy", "numba"):
        t = timings[name]
        row += f"  {t * 1e3:>9.2f} ms" if t is not None else f"  {'n/a':>12}"
    if timings["numba"] is not None:
        row += f"  {timings['numpy'] / timings['numba']:>6.1f}x"
    print(row)


def _numba_available():
    try:
        kernels.set_backend("numba")
        return True
    except RuntimeError:
        return False


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timed repetitions per case (best-of)")
    ap.add_argument("--quick", action="store_true",
                    help="small sizes only")
    args = ap.parse_args()

    rng = np.random.default_rng(2024)
    default_backend = kernels.backend()
    print(f"default backend: {default_backend}")
    print(f"{'workload':<42}  {'numpy':>12}  {'numba':>12}  {'speedup':>6}")

    tri_sizes = (2_000, 20_000) if args.quick else (2_000, 20_000, 100_000)
    for n in tri_sizes:
        verts, tris = box_stack_mesh(n // 12, rng)
        bench_backends(
            f"slice_crossing  {len(tris):>7} triangles",
            lambda v=verts, t=tris: kernels.slice_crossing(v, t, 0.5, 1e-7),
            args.repeats)

    pt_sizes = (2_000,) if args.quick else (2_000, 8_000)
    for n in pt_sizes:
        pts = clustered_points(n, rng)
        bench_backends(
            f"dbscan_labels   {n:>7} points",
            lambda p=pts: kernels.dbscan_labels(p, 1.0, 4),
            args.repeats)

    ring = regular_ring(256)
    queries = rng.uniform(-50.0, 50.0, (200_000, 2))
    bench_backends(
        "points_in_polygon 200000 pts / 256-gon",
        lambda: kernels.points_in_polygon(queries, ring, 1e-9),
        args.repeats)

    chain = regular_ring(600)
    probes = rng.uniform(-60.0, 60.0, (2_000, 4))

    def chain_calls():
        for px, py, qx, qy in probes:
            kernels.chain_blocks(chain, len(chain), (px, py), (qx, qy))

    bench_backends("chain_blocks     2000 calls / 600-pt chain",
                   chain_calls, args.repeats)

    kernels.set_backend(default_backend)


if __name__ == "__main__":
    main()
