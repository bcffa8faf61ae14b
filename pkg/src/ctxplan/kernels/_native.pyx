# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-loop kernels.

Mirror of ``pyref.py``; see that module for the shared semantics. The scalar
arithmetic is kept structurally identical to the reference so both backends
agree to floating-point roundoff.
"""

from libc.math cimport INFINITY, exp, sqrt

import numpy as np


cdef inline bint _pt_in(double x, double y, const double[:, ::1] rects) noexcept:
    cdef Py_ssize_t i
    for i in range(rects.shape[0]):
        if rects[i, 0] <= x <= rects[i, 2] and rects[i, 1] <= y <= rects[i, 3]:
            return True
    return False


cdef inline bint _slab(double a, double d, double lo, double hi,
                       double* t0, double* t1) noexcept:
    cdef double u, v
    if d != 0.0:
        u = (lo - a) / d
        v = (hi - a) / d
        if u <= v:
            t0[0] = u
            t1[0] = v
        else:
            t0[0] = v
            t1[0] = u
        return True
    if lo <= a <= hi:
        t0[0] = -INFINITY
        t1[0] = INFINITY
        return True
    return False


cdef inline bint _seg_hit(double ax, double ay, double bx, double by,
                          const double[:, ::1] rects) noexcept:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double x0, x1, y0, y1, t0, t1
    cdef Py_ssize_t i
    for i in range(rects.shape[0]):
        if not _slab(ax, dx, rects[i, 0], rects[i, 2], &x0, &x1):
            continue
        if not _slab(ay, dy, rects[i, 1], rects[i, 3], &y0, &y1):
            continue
        t0 = x0 if x0 > y0 else y0
        if t0 < 0.0:
            t0 = 0.0
        t1 = x1 if x1 < y1 else y1
        if t1 > 1.0:
            t1 = 1.0
        if t0 <= t1:
            return True
    return False


def point_in_rects(double x, double y, const double[:, ::1] rects):
    return bool(_pt_in(x, y, rects))


def segment_collides(double ax, double ay, double bx, double by,
                     const double[:, ::1] rects):
    return bool(_seg_hit(ax, ay, bx, by, rects))


def first_hit_param(double ax, double ay, double bx, double by,
                    const double[:, ::1] rects):
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double best = -1.0
    cdef double x0, x1, y0, y1, t0, t1
    cdef Py_ssize_t i
    for i in range(rects.shape[0]):
        if not _slab(ax, dx, rects[i, 0], rects[i, 2], &x0, &x1):
            continue
        if not _slab(ay, dy, rects[i, 1], rects[i, 3], &y0, &y1):
            continue
        t0 = x0 if x0 > y0 else y0
        if t0 < 0.0:
            t0 = 0.0
        t1 = x1 if x1 < y1 else y1
        if t1 > 1.0:
            t1 = 1.0
        if t0 <= t1 and t1 > 0.0:
            if best < 0.0 or t0 < best:
                best = t0
    return best


def drift_at(double x, double y, const double[:, ::1] regions, double default):
    cdef Py_ssize_t i
    for i in range(regions.shape[0]):
        if regions[i, 0] <= x <= regions[i, 2] and regions[i, 1] <= y <= regions[i, 3]:
            return regions[i, 4]
    return default


def nearest_index(const double[::1] xs, const double[::1] ys, Py_ssize_t n,
                  double px, double py):
    cdef Py_ssize_t i, best = 0
    cdef double dx, dy, d2
    cdef double best_d2 = INFINITY
    for i in range(n):
        dx = xs[i] - px
        dy = ys[i] - py
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best_d2 = d2
            best = i
    return best


def occupancy(double cx, double cy, const double[:, ::1] offsets,
              const double[:, ::1] rects, double xmin, double ymin,
              double xmax, double ymax, double[::1] out):
    cdef Py_ssize_t i
    cdef double gx, gy
    for i in range(offsets.shape[0]):
        gx = cx + offsets[i, 0]
        gy = cy + offsets[i, 1]
        if gx < xmin or gx > xmax or gy < ymin or gy > ymax:
            out[i] = 1.0
        elif _pt_in(gx, gy, rects):
            out[i] = 1.0
        else:
            out[i] = 0.0


def best_extension(double nx, double ny, double tx, double ty,
                   const double[:, ::1] controls, double duration,
                   double xmin, double ymin, double xmax, double ymax,
                   const double[:, ::1] rects):
    cdef Py_ssize_t i, best = -1
    cdef double px, py, d2
    cdef double best_d2 = INFINITY
    for i in range(controls.shape[0]):
        px = nx + duration * controls[i, 0]
        py = ny + duration * controls[i, 1]
        if px < xmin:
            px = xmin
        elif px > xmax:
            px = xmax
        if py < ymin:
            py = ymin
        elif py > ymax:
            py = ymax
        if _seg_hit(nx, ny, px, py, rects):
            continue
        d2 = (px - tx) * (px - tx) + (py - ty) * (py - ty)
        if d2 < best_d2:
            best_d2 = d2
            best = i
    return best


def cost_terms(const double[::1] query, const double[:, ::1] contexts,
               const double[::1] errors, const double[::1] labels):
    cdef Py_ssize_t m = contexts.shape[0]
    cdef Py_ssize_t f = query.shape[0]
    if m == 0:
        return 0.0, 0.0
    sims_arr = np.empty(m, dtype=np.float64)
    order_arr = np.arange(m, dtype=np.intp)
    cdef double[::1] sims = sims_arr
    cdef Py_ssize_t[::1] order = order_arr
    cdef Py_ssize_t i, j, k, idx
    cdef double acc, d, s, p, keep, wsum, esum
    for i in range(m):
        acc = 0.0
        for j in range(f):
            d = contexts[i, j] - query[j]
            acc += d * d
        sims[i] = exp(-0.5 * sqrt(acc))
    # insertion sort, similarity descending, stable (ties keep row order)
    for j in range(1, m):
        idx = order[j]
        s = sims[idx]
        k = j - 1
        while k >= 0 and sims[order[k]] < s:
            order[k + 1] = order[k]
            k -= 1
        order[k + 1] = idx
    p = 0.0
    keep = 1.0
    for j in range(m):
        idx = order[j]
        s = sims[idx]
        if labels[idx] != 0.0:
            p += keep * s
        keep *= 1.0 - s
    wsum = 0.0
    esum = 0.0
    for j in range(m):
        wsum += sims[j]
        esum += sims[j] * errors[j]
    if wsum > 0.0:
        return p, esum / wsum
    return p, 0.0
