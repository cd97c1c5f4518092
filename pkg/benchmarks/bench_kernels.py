"""Times the compiled kernels against the numpy fallback on one machine.

Both backends share the BVH build (pure geometry, done once); the timed
region is only the distance / raycast kernel. Sizes cover a handheld-scan
ballpark: tens of thousands of queries against meshes up to ~20k triangles.

Run:  python benchmarks/bench_kernels.py [--quick]
"""
import argparse
import time

import numpy as np

from cloudsketch.kernels import BACKEND, pure
from cloudsketch.mesh import TriangleBvh, TriangleMesh

try:
    from cloudsketch.kernels import _native
except ImportError:
    _native = None


def random_mesh(rng, triangles: int) -> TriangleMesh:
    spine = rng.uniform(-1, 1, (max(triangles // 2, 4), 3))
    vertices = np.vstack([spine + rng.normal(0, 0.05, spine.shape) for _ in range(3)])
    tris = rng.integers(0, len(vertices), (triangles, 3))
    return TriangleMesh(vertices, tris).drop_degenerate()


def timed(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run(quick: bool) -> None:
    rng = np.random.default_rng(42)
    sizes = [(1_000, 2_000), (5_000, 10_000)] if quick else [
        (1_000, 2_000),
        (5_000, 10_000),
        (20_000, 50_000),
    ]
    repeats = 2 if quick else 3

    print("active backend: %s" % BACKEND)
    if _native is None:
        print("compiled backend unavailable; timing the fallback only")
    header = "%-22s %12s %12s %9s" % ("case", "native", "pure", "speedup")
    print(header)
    print("-" * len(header))

    for tri_count, query_count in sizes:
        mesh = random_mesh(rng, tri_count)
        bvh = TriangleBvh(mesh)
        queries = rng.uniform(-1.5, 1.5, (query_count, 3))
        origins = rng.uniform(-1.5, 1.5, (query_count, 3))
        dirs = rng.normal(size=(query_count, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

        for name, native_fn, pure_fn in (
            (
                "distance",
                (lambda: _native.closest_squared_distances(bvh, queries))
                if _native else None,
                lambda: pure.closest_squared_distances(bvh, queries),
            ),
            (
                "raycast",
                (lambda: _native.raycast(bvh, origins, dirs, np.inf))
                if _native else None,
                lambda: pure.raycast(bvh, origins, dirs, np.inf),
            ),
        ):
            pure_s = timed(pure_fn, repeats)
            if native_fn is None:
                print("%-22s %12s %11.1fms %9s"
                      % ("%s %dt/%dq" % (name, tri_count, query_count),
                         "-", 1e3 * pure_s, "-"))
                continue
            native_s = timed(native_fn, repeats)
            print("%-22s %11.1fms %11.1fms %8.1fx"
                  % ("%s %dt/%dq" % (name, tri_count, query_count),
                     1e3 * native_s, 1e3 * pure_s, pure_s / native_s))

        if _native is not None:
            same_d = np.array_equal(
                _native.closest_squared_distances(bvh, queries),
                pure.closest_squared_distances(bvh, queries),
            )
            nt, ni = _native.raycast(bvh, origins, dirs, np.inf)
            pt, pi = pure.raycast(bvh, origins, dirs, np.inf)
            same_r = np.array_equal(nt, pt) and np.array_equal(ni, pi)
            if not (same_d and same_r):
                raise SystemExit("backend outputs diverged; do not trust timings")

    if _native is not None:
        print("backend outputs verified bit-identical on every case")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true",
                        help="small sizes, fewer repeats")
    run(parser.parse_args().quick)


if __name__ == "__main__":
    main()
