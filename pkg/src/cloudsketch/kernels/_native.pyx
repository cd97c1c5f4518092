# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled BVH kernels for closest-triangle and first-hit ray queries.

Per-triangle arithmetic mirrors kernels.pure expression for expression;
the extension is compiled with -ffp-contract=off so results are
bit-identical across backends. Only the traversal differs: a stack-based
walk over the flat BVH arrays instead of an exhaustive scan.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs

BACKEND_NAME = "native"

RAY_DET_EPS = 1e-12
RAY_T_MIN = 1e-9

cdef double _DET_EPS = 1e-12
cdef double _T_MIN = 1e-9

cdef inline double _tri_sqdist(const double* a, const double* b, const double* c,
                               double px, double py, double pz) noexcept nogil:
    """Squared distance from point p to triangle (a, b, c), Ericson cascade."""
    cdef double abx = b[0] - a[0], aby = b[1] - a[1], abz = b[2] - a[2]
    cdef double acx = c[0] - a[0], acy = c[1] - a[1], acz = c[2] - a[2]
    cdef double apx = px - a[0], apy = py - a[1], apz = pz - a[2]
    cdef double d1 = abx * apx + aby * apy + abz * apz
    cdef double d2 = acx * apx + acy * apy + acz * apz
    cdef double bpx, bpy, bpz, cpx, cpy, cpz
    cdef double d3, d4, d5, d6, va, vb, vc, v, w, denom, ex, ey, ez

    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz

    bpx = px - b[0]; bpy = py - b[1]; bpz = pz - b[2]
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        ex = apx - v * abx; ey = apy - v * aby; ez = apz - v * abz
        return ex * ex + ey * ey + ez * ez

    cpx = px - c[0]; cpy = py - c[1]; cpz = pz - c[2]
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        ex = apx - w * acx; ey = apy - w * acy; ez = apz - w * acz
        return ex * ex + ey * ey + ez * ez

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        ex = bpx - w * (c[0] - b[0]); ey = bpy - w * (c[1] - b[1]); ez = bpz - w * (c[2] - b[2])
        return ex * ex + ey * ey + ez * ez

    denom = va + vb + vc
    v = vb / denom
    w = vc / denom
    ex = apx - (v * abx + w * acx)
    ey = apy - (v * aby + w * acy)
    ez = apz - (v * abz + w * acz)
    return ex * ex + ey * ey + ez * ez


cdef inline double _box_sqdist(const double* lo, const double* hi,
                               double px, double py, double pz) noexcept nogil:
    cdef double dx = 0.0, dy = 0.0, dz = 0.0
    if px < lo[0]:
        dx = lo[0] - px
    elif px > hi[0]:
        dx = px - hi[0]
    if py < lo[1]:
        dy = lo[1] - py
    elif py > hi[1]:
        dy = py - hi[1]
    if pz < lo[2]:
        dz = lo[2] - pz
    elif pz > hi[2]:
        dz = pz - hi[2]
    return dx * dx + dy * dy + dz * dz


def closest_squared_distances(bvh, queries):
    """Squared distance from each query point to the nearest triangle."""
    queries = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, ::1] q = queries
    cdef const double[:, ::1] nmin = bvh.node_min
    cdef const double[:, ::1] nmax = bvh.node_max
    cdef const int[::1] left = bvh.node_left
    cdef const int[::1] right = bvh.node_right
    cdef const int[::1] start = bvh.node_start
    cdef const int[::1] count = bvh.node_count
    cdef const int[::1] order = bvh.tri_order
    cdef const double[:, ::1] v0 = bvh.v0
    cdef const double[:, ::1] v1 = bvh.v1
    cdef const double[:, ::1] v2 = bvh.v2

    out = np.empty(len(queries), dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t i, j, k
    cdef int node, ti, l, r, sp
    cdef int stack[128]
    cdef double px, py, pz, best, bound, dd, bl, br

    with nogil:
        for i in range(q.shape[0]):
            px = q[i, 0]; py = q[i, 1]; pz = q[i, 2]
            best = INFINITY
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                bound = _box_sqdist(&nmin[node, 0], &nmax[node, 0], px, py, pz)
                if bound > best:
                    continue
                if left[node] < 0:
                    for j in range(start[node], start[node] + count[node]):
                        ti = order[j]
                        dd = _tri_sqdist(&v0[ti, 0], &v1[ti, 0], &v2[ti, 0], px, py, pz)
                        if dd < best:
                            best = dd
                else:
                    l = left[node]
                    r = right[node]
                    bl = _box_sqdist(&nmin[l, 0], &nmax[l, 0], px, py, pz)
                    br = _box_sqdist(&nmin[r, 0], &nmax[r, 0], px, py, pz)
                    # push the farther child first so the nearer pops first
                    if bl <= br:
                        stack[sp] = r; sp += 1
                        stack[sp] = l; sp += 1
                    else:
                        stack[sp] = l; sp += 1
                        stack[sp] = r; sp += 1
            res[i] = best
    return out


cdef inline bint _ray_box(const double* lo, const double* hi,
                          double ox, double oy, double oz,
                          double dx, double dy, double dz,
                          double t_cap, double* t_near) noexcept nogil:
    """Ray-AABB slab test over [T_MIN, t_cap]; writes entry t on hit."""
    cdef double t0 = _T_MIN, t1 = t_cap
    cdef double inv, ta, tb, tmp

    if dx != 0.0:
        inv = 1.0 / dx
        ta = (lo[0] - ox) * inv
        tb = (hi[0] - ox) * inv
        if ta > tb:
            tmp = ta; ta = tb; tb = tmp
        if ta > t0: t0 = ta
        if tb < t1: t1 = tb
    elif ox < lo[0] or ox > hi[0]:
        return 0
    if dy != 0.0:
        inv = 1.0 / dy
        ta = (lo[1] - oy) * inv
        tb = (hi[1] - oy) * inv
        if ta > tb:
            tmp = ta; ta = tb; tb = tmp
        if ta > t0: t0 = ta
        if tb < t1: t1 = tb
    elif oy < lo[1] or oy > hi[1]:
        return 0
    if dz != 0.0:
        inv = 1.0 / dz
        ta = (lo[2] - oz) * inv
        tb = (hi[2] - oz) * inv
        if ta > tb:
            tmp = ta; ta = tb; tb = tmp
        if ta > t0: t0 = ta
        if tb < t1: t1 = tb
    elif oz < lo[2] or oz > hi[2]:
        return 0
    if t0 > t1:
        return 0
    t_near[0] = t0
    return 1


cdef inline double _ray_tri(const double* a, const double* b, const double* c,
                            double ox, double oy, double oz,
                            double dx, double dy, double dz,
                            double max_t) noexcept nogil:
    """Moller-Trumbore; returns hit distance or INFINITY."""
    cdef double e1x = b[0] - a[0], e1y = b[1] - a[1], e1z = b[2] - a[2]
    cdef double e2x = c[0] - a[0], e2y = c[1] - a[1], e2z = c[2] - a[2]
    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    cdef double inv, tx, ty, tz, u, v, t, qx, qy, qz

    if fabs(det) < _DET_EPS:
        return INFINITY
    inv = 1.0 / det
    tx = ox - a[0]; ty = oy - a[1]; tz = oz - a[2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return INFINITY
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return INFINITY
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t < _T_MIN or t > max_t:
        return INFINITY
    return t


def raycast(bvh, origins, dirs, max_t=np.inf):
    """First-hit ray cast: returns (t, triangle index), misses are (inf, -1)."""
    origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, ::1] o = origins
    cdef const double[:, ::1] d = dirs
    cdef const double[:, ::1] nmin = bvh.node_min
    cdef const double[:, ::1] nmax = bvh.node_max
    cdef const int[::1] left = bvh.node_left
    cdef const int[::1] right = bvh.node_right
    cdef const int[::1] start = bvh.node_start
    cdef const int[::1] count = bvh.node_count
    cdef const int[::1] order = bvh.tri_order
    cdef const double[:, ::1] v0 = bvh.v0
    cdef const double[:, ::1] v1 = bvh.v1
    cdef const double[:, ::1] v2 = bvh.v2
    cdef double cap = float(max_t)

    t_out = np.empty(len(origins), dtype=np.float64)
    tri_out = np.empty(len(origins), dtype=np.int64)
    cdef double[::1] tres = t_out
    cdef cnp.int64_t[::1] trires = tri_out
    cdef Py_ssize_t i, j
    cdef int node, ti, l, r, sp
    cdef cnp.int64_t best_tri
    cdef int stack[128]
    cdef double ox, oy, oz, dx, dy, dz, best_t, t, tl, tr
    cdef bint hit_l, hit_r

    with nogil:
        for i in range(o.shape[0]):
            ox = o[i, 0]; oy = o[i, 1]; oz = o[i, 2]
            dx = d[i, 0]; dy = d[i, 1]; dz = d[i, 2]
            best_t = INFINITY
            best_tri = -1
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if not _ray_box(&nmin[node, 0], &nmax[node, 0], ox, oy, oz, dx, dy, dz,
                                cap if cap < best_t else best_t, &t):
                    continue
                if left[node] < 0:
                    for j in range(start[node], start[node] + count[node]):
                        ti = order[j]
                        t = _ray_tri(&v0[ti, 0], &v1[ti, 0], &v2[ti, 0],
                                     ox, oy, oz, dx, dy, dz, cap)
                        if t < best_t or (t == best_t and t != INFINITY and ti < best_tri):
                            best_t = t
                            best_tri = ti
                else:
                    l = left[node]
                    r = right[node]
                    hit_l = _ray_box(&nmin[l, 0], &nmax[l, 0], ox, oy, oz, dx, dy, dz,
                                     cap if cap < best_t else best_t, &tl)
                    hit_r = _ray_box(&nmin[r, 0], &nmax[r, 0], ox, oy, oz, dx, dy, dz,
                                     cap if cap < best_t else best_t, &tr)
                    if hit_l and hit_r:
                        if tl <= tr:
                            stack[sp] = r; sp += 1
                            stack[sp] = l; sp += 1
                        else:
                            stack[sp] = l; sp += 1
                            stack[sp] = r; sp += 1
                    elif hit_l:
                        stack[sp] = l; sp += 1
                    elif hit_r:
                        stack[sp] = r; sp += 1
            tres[i] = best_t
            trires[i] = best_tri
    return t_out, tri_out
