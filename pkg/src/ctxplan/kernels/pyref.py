"""Pure-Python implementation of the hot-loop kernels.

This is the fallback backend used when the compiled extension in
``_native.pyx`` is not available. Function signatures and semantics match the
compiled module one-for-one; scalar code paths are kept structurally
identical so the two backends agree to floating-point roundoff
(``tests/test_kernels.py`` enforces parity).

Conventions shared by both backends:

* rectangles are rows ``[xmin, ymin, xmax, ymax]`` of a C-contiguous float64
  array and are treated as closed sets,
* drift regions are rows ``[xmin, ymin, xmax, ymax, delta]``,
* all coordinates are plain float64.
"""

from __future__ import annotations

import math

import numpy as np

_INF = math.inf


def point_in_rects(x, y, rects):
    """True if (x, y) lies inside any rectangle (closed containment)."""
    for i in range(rects.shape[0]):
        if rects[i, 0] <= x <= rects[i, 2] and rects[i, 1] <= y <= rects[i, 3]:
            return True
    return False


def _slab(a, d, lo, hi):
    """Parameter interval where a + t*d stays within [lo, hi], or None."""
    if d != 0.0:
        t0 = (lo - a) / d
        t1 = (hi - a) / d
        if t0 <= t1:
            return t0, t1
        return t1, t0
    if lo <= a <= hi:
        return -_INF, _INF
    return None


def segment_collides(ax, ay, bx, by, rects):
    """True if the closed segment a-b intersects any rectangle.

    Touching a rectangle boundary (including tangency and single-point
    contact) counts as a collision.
    """
    dx = bx - ax
    dy = by - ay
    for i in range(rects.shape[0]):
        sx = _slab(ax, dx, rects[i, 0], rects[i, 2])
        if sx is None:
            continue
        sy = _slab(ay, dy, rects[i, 1], rects[i, 3])
        if sy is None:
            continue
        t0 = max(sx[0], sy[0], 0.0)
        t1 = min(sx[1], sy[1], 1.0)
        if t0 <= t1:
            return True
    return False


def first_hit_param(ax, ay, bx, by, rects):
    """Earliest parameter t in [0, 1] at which motion a->b is blocked.

    Returns -1.0 when the motion is unobstructed. A contact that consists
    only of the start instant (the segment touches a rectangle at t=0 and
    immediately leaves it) does not block; this lets a state resting exactly
    on an obstacle face move away from it.
    """
    dx = bx - ax
    dy = by - ay
    best = -1.0
    for i in range(rects.shape[0]):
        sx = _slab(ax, dx, rects[i, 0], rects[i, 2])
        if sx is None:
            continue
        sy = _slab(ay, dy, rects[i, 1], rects[i, 3])
        if sy is None:
            continue
        t0 = max(sx[0], sy[0], 0.0)
        t1 = min(sx[1], sy[1], 1.0)
        if t0 <= t1 and t1 > 0.0:
            if best < 0.0 or t0 < best:
                best = t0
    return best


def drift_at(x, y, regions, default):
    """Drift magnitude at (x, y): first containing region's delta, else default.

    Regions are validated elsewhere to have disjoint interiors, so the
    first-match rule is order-independent except on shared boundaries.
    """
    for i in range(regions.shape[0]):
        if regions[i, 0] <= x <= regions[i, 2] and regions[i, 1] <= y <= regions[i, 3]:
            return float(regions[i, 4])
    return float(default)


def nearest_index(xs, ys, n, px, py):
    """Index of the point closest to (px, py) among the first n entries."""
    dx = xs[:n] - px
    dy = ys[:n] - py
    return int(np.argmin(dx * dx + dy * dy))


def occupancy(cx, cy, offsets, rects, xmin, ymin, xmax, ymax, out):
    """Fill ``out`` with the binary occupancy of grid points around (cx, cy).

    A grid point is occupied when it lies inside an obstacle rectangle or
    outside the world bounds.
    """
    for i in range(offsets.shape[0]):
        gx = cx + offsets[i, 0]
        gy = cy + offsets[i, 1]
        if gx < xmin or gx > xmax or gy < ymin or gy > ymax:
            out[i] = 1.0
        elif point_in_rects(gx, gy, rects):
            out[i] = 1.0
        else:
            out[i] = 0.0


def best_extension(nx, ny, tx, ty, controls, duration, xmin, ymin, xmax, ymax, rects):
    """Pick the control whose propagated state lands closest to (tx, ty).

    Each row of ``controls`` is propagated from (nx, ny) with the nominal
    dynamics (duration-scaled step, clamped to bounds); candidates whose
    segment collides are discarded. Returns the winning row index or -1.
    """
    best = -1
    best_d2 = _INF
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
        if segment_collides(nx, ny, px, py, rects):
            continue
        d2 = (px - tx) * (px - tx) + (py - ty) * (py - ty)
        if d2 < best_d2:
            best_d2 = d2
            best = i
    return best


def cost_terms(query, contexts, errors, labels):
    """Anomaly probability and expected-error estimate for one context query.

    ``contexts`` holds one stored context per row; similarity to the query is
    exp(-0.5 * ||query - row||). The anomaly probability chains similarities
    in descending order (ties broken by row order): each stored transition
    contributes sim * label weighted by the probability that no more-similar
    transition already decided the outcome. The error estimate is the
    similarity-weighted mean of ``errors``. Returns (0.0, 0.0) when the store
    is empty.
    """
    m = contexts.shape[0]
    if m == 0:
        return 0.0, 0.0
    diff = contexts - query
    sims = np.exp(-0.5 * np.sqrt(np.einsum("ij,ij->i", diff, diff)))
    order = np.argsort(-sims, kind="stable")
    p = 0.0
    keep = 1.0
    for j in order:
        s = float(sims[j])
        if labels[j] != 0.0:
            p += keep * s
        keep *= 1.0 - s
    wsum = 0.0
    esum = 0.0
    for j in range(m):
        wsum += float(sims[j])
        esum += float(sims[j]) * float(errors[j])
    if wsum > 0.0:
        return p, esum / wsum
    return p, 0.0
