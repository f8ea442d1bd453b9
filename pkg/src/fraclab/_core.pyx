# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled polyline query kernels.

Arithmetic matches fraclab._kernels_np operation for operation; the build
disables FMA contraction so both backends return bit-identical values.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()


cdef inline double _seg_dist2(double px, double py, double ax, double ay,
                              double ex, double ey, double L2) noexcept nogil:
    cdef double t, dx, dy
    if L2 > 0.0:
        t = ((px - ax) * ex + (py - ay) * ey) / L2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    else:
        t = 0.0
    dx = px - (ax + t * ex)
    dy = py - (ay + t * ey)
    return dx * dx + dy * dy


cdef inline double _box_dist2(double px, double py, double x0, double y0,
                              double x1, double y1) noexcept nogil:
    cdef double dx = 0.0, dy = 0.0
    if px < x0:
        dx = x0 - px
    elif px > x1:
        dx = px - x1
    if py < y0:
        dy = y0 - py
    elif py > y1:
        dy = py - y1
    return dx * dx + dy * dy


def polyline_distance(double[::1] px, double[::1] py,
                      double[::1] ax, double[::1] ay,
                      double[::1] ex, double[::1] ey, double[::1] L2,
                      double[::1] tbx0, double[::1] tby0,
                      double[::1] tbx1, double[::1] tby1,
                      int slots, int leaf_size, int nseg,
                      double[::1] ub_vals, double ub_x0, double ub_y0,
                      double ub_inv_h, int ub_nx, int ub_ny,
                      double[::1] out):
    """Nearest distance via best-first descent of the implicit AABB tree.

    Node i has children 2i and 2i+1; leaves occupy [slots, 2*slots) and
    leaf j covers ordered segments [j*leaf_size, min(nseg, (j+1)*leaf_size)).
    ub_vals is an optional (ub_nx*ub_ny) grid of upper bounds on the
    distance from cell centers; it seeds the search radius through the
    triangle inequality.  Pass ub_nx = 0 to disable.
    """
    cdef Py_ssize_t n = px.shape[0], q
    cdef int stack[128]
    cdef int sp, node, left, s0, s1, k, j, ci, cj
    cdef double x, y, best2, d2, dl, dr, dd, cx, cy, ub

    with nogil:
        for q in range(n):
            x = px[q]
            y = py[q]
            best2 = 1e308
            if ub_nx > 0:
                ci = <int>floor((x - ub_x0) * ub_inv_h)
                cj = <int>floor((y - ub_y0) * ub_inv_h)
                if ci < 0:
                    ci = 0
                elif ci >= ub_nx:
                    ci = ub_nx - 1
                if cj < 0:
                    cj = 0
                elif cj >= ub_ny:
                    cj = ub_ny - 1
                cx = ub_x0 + (ci + 0.5) / ub_inv_h
                cy = ub_y0 + (cj + 0.5) / ub_inv_h
                # distance to the cell center plus the center's own bound,
                # inflated so the true minimum always stays strictly inside
                ub = sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy)) + ub_vals[cj * ub_nx + ci]
                ub = ub * 1.0000001 + 1e-300
                best2 = ub * ub
            stack[0] = 1
            sp = 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if _box_dist2(x, y, tbx0[node], tby0[node], tbx1[node], tby1[node]) >= best2:
                    continue
                if node >= slots:
                    j = node - slots
                    s0 = j * leaf_size
                    s1 = s0 + leaf_size
                    if s1 > nseg:
                        s1 = nseg
                    for k in range(s0, s1):
                        dd = _seg_dist2(x, y, ax[k], ay[k], ex[k], ey[k], L2[k])
                        if dd < best2:
                            best2 = dd
                else:
                    left = 2 * node
                    dl = _box_dist2(x, y, tbx0[left], tby0[left], tbx1[left], tby1[left])
                    dr = _box_dist2(x, y, tbx0[left + 1], tby0[left + 1],
                                    tbx1[left + 1], tby1[left + 1])
                    # push the farther child first so the nearer pops first
                    if dl <= dr:
                        if dr < best2:
                            stack[sp] = left + 1
                            sp += 1
                        if dl < best2:
                            stack[sp] = left
                            sp += 1
                    else:
                        if dl < best2:
                            stack[sp] = left
                            sp += 1
                        if dr < best2:
                            stack[sp] = left + 1
                            sp += 1
            out[q] = sqrt(best2)


def polyline_parity(double[::1] px, double[::1] py,
                    double[::1] ax, double[::1] ay,
                    double[::1] bx, double[::1] by,
                    long long[::1] row_start, long long[::1] row_items,
                    double row_y0, double row_inv_h, int n_rows,
                    unsigned char[::1] out):
    """Crossing-number parity using the row-binned candidate lists."""
    cdef Py_ssize_t n = px.shape[0], q, ii
    cdef long long s
    cdef int r, cnt
    cdef double xx, yy, a_y, b_y, xi

    with nogil:
        for q in range(n):
            xx = px[q]
            yy = py[q]
            r = <int>floor((yy - row_y0) * row_inv_h)
            if r < 0:
                r = 0
            elif r >= n_rows:
                r = n_rows - 1
            cnt = 0
            for ii in range(row_start[r], row_start[r + 1]):
                s = row_items[ii]
                a_y = ay[s]
                b_y = by[s]
                if (a_y > yy) != (b_y > yy):
                    xi = ax[s] + (yy - a_y) * ((bx[s] - ax[s]) / (b_y - a_y))
                    if xx < xi:
                        cnt += 1
            out[q] = cnt & 1
