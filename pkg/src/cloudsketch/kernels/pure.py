"""Numpy fallback for the hot geometry kernels.

Per-triangle arithmetic is expression-for-expression identical to the
compiled backend (which is built with -ffp-contract=off), so both
backends return bit-identical values. The fallback scans all triangles
instead of traversing the BVH, chunked to bound memory; with vectorized
numpy that beats a Python-level tree walk for desk-scale meshes.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"

RAY_DET_EPS = 1e-12
RAY_T_MIN = 1e-9

_PAIR_BUDGET = 1_000_000


def _dot(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def _cross(u, v):
    out = np.empty(np.broadcast(u, v).shape[:-1] + (3,), dtype=np.float64)
    out[..., 0] = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    out[..., 1] = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    out[..., 2] = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return out


def _closest_sqdist_block(v0, v1, v2, queries):
    """Squared point-triangle distances, (R, T) -> min over T.

    Region tests follow Ericson's closest-point cascade with exact
    (zero-tolerance) comparisons; lanes excluded by earlier regions are
    masked out, mirroring the scalar branch order.
    """
    a = v0[None, :, :]
    b = v1[None, :, :]
    c = v2[None, :, :]
    p = queries[:, None, :]

    ab = b - a
    ac = c - a
    ap = p - a
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    bp = p - b
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    cp = p - c
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    dd = np.empty(d1.shape, dtype=np.float64)
    remain = np.ones(d1.shape, dtype=bool)

    def take(mask, values):
        use = remain & mask
        dd[use] = values[use]
        remain[use] = False

    with np.errstate(divide="ignore", invalid="ignore"):
        take((d1 <= 0.0) & (d2 <= 0.0), _dot(ap, ap))
        take((d3 >= 0.0) & (d4 <= d3), _dot(bp, bp))

        v = d1 / (d1 - d3)
        e = ap - v[..., None] * ab
        take((vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0), _dot(e, e))

        take((d6 >= 0.0) & (d5 <= d6), _dot(cp, cp))

        w = d2 / (d2 - d6)
        e = ap - w[..., None] * ac
        take((vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0), _dot(e, e))

        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        e = bp - w[..., None] * (c - b)
        take((va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0), _dot(e, e))

        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        e = ap - (v[..., None] * ab + w[..., None] * ac)
        take(np.ones(d1.shape, dtype=bool), _dot(e, e))

    return dd.min(axis=1)


def closest_squared_distances(bvh, queries) -> np.ndarray:
    """Squared distance from each query point to the nearest triangle."""
    queries = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
    out = np.empty(len(queries), dtype=np.float64)
    step = max(1, _PAIR_BUDGET // max(len(bvh.v0), 1))
    for s in range(0, len(queries), step):
        out[s : s + step] = _closest_sqdist_block(bvh.v0, bvh.v1, bvh.v2, queries[s : s + step])
    return out


def _raycast_block(v0, v1, v2, origins, dirs, max_t):
    """Moller-Trumbore over all (ray, triangle) pairs in a block."""
    a = v0[None, :, :]
    d = dirs[:, None, :]
    o = origins[:, None, :]

    e1 = v1[None, :, :] - a
    e2 = v2[None, :, :] - a
    pvec = _cross(d, e2)
    det = _dot(e1, pvec)
    valid = np.abs(det) >= RAY_DET_EPS

    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tvec = o - a
        u = _dot(tvec, pvec) * inv
        valid &= (u >= 0.0) & (u <= 1.0)
        qvec = _cross(tvec, e1)
        v = _dot(d, qvec) * inv
        valid &= (v >= 0.0) & (u + v <= 1.0)
        t = _dot(e2, qvec) * inv
        valid &= (t >= RAY_T_MIN) & (t <= max_t)

    t = np.where(valid, t, np.inf)
    # argmin returns the first minimum, i.e. the lowest triangle index on
    # exact ties, matching the compiled traversal's tie-break.
    best = np.argmin(t, axis=1)
    rows = np.arange(len(origins))
    best_t = t[rows, best]
    hit = np.isfinite(best_t)
    return np.where(hit, best_t, np.inf), np.where(hit, best, -1)


def raycast(bvh, origins, dirs, max_t=np.inf):
    """First-hit ray cast: returns (t, triangle index), misses are (inf, -1)."""
    origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    t_out = np.empty(len(origins), dtype=np.float64)
    tri_out = np.empty(len(origins), dtype=np.int64)
    step = max(1, _PAIR_BUDGET // max(len(bvh.v0), 1))
    for s in range(0, len(origins), step):
        t_out[s : s + step], tri_out[s : s + step] = _raycast_block(
            bvh.v0, bvh.v1, bvh.v2, origins[s : s + step], dirs[s : s + step], max_t
        )
    return t_out, tri_out
