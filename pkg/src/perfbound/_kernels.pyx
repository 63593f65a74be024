# cython: language_level=3
"""Compiled kernels: scenario stepping and minimax design search.

Mirrors _kernels_py operation-for-operation (and is compiled with
-ffp-contract=off), so both backends return bit-identical results.
"""

import numpy as np

from libc.math cimport INFINITY, NAN, ceil, sqrt

COMPILED = True


cdef inline void _advance(double* gap, double* ve, double vt, double t0,
                          double t1, double t_brake, double decel) nogil:
    cdef double tb, dgap, rem, h, ve_new
    if ve[0] > vt and t_brake < t1:
        tb = t_brake if t_brake > t0 else t0
        dgap = (ve[0] - vt) * (tb - t0)
        rem = t1 - tb
        h = (ve[0] - vt) / decel
        if h < rem:
            dgap += 0.5 * (ve[0] - vt) * h
            ve[0] = vt
        else:
            ve_new = ve[0] - decel * rem
            dgap += 0.5 * (ve[0] + ve_new - 2.0 * vt) * rem
            ve[0] = ve_new
    else:
        dgap = (ve[0] - vt) * (t1 - t0)
    gap[0] = gap[0] - dgap


cdef inline int _simulate_one(double ve0, double vt, double d_det, double decel,
                              double react, double gap0, double dt, double tmax,
                              double* out_det_gap, double* out_min_gap,
                              double* out_t, int* out_status) nogil:
    cdef double ve = ve0
    cdef double gap = gap0
    cdef double min_gap = gap
    cdef double det_gap, t_brake, t0, t1, g_prev, t_det
    cdef bint detected = gap <= d_det
    cdef long n_max, k

    out_status[0] = 0
    if detected:
        det_gap = gap
        t_brake = react
    else:
        det_gap = NAN
        t_brake = INFINITY
    if gap <= 0.0:
        out_det_gap[0] = det_gap
        out_min_gap[0] = 0.0
        out_t[0] = 0.0
        return 1
    if ve == vt:
        out_det_gap[0] = det_gap
        out_min_gap[0] = gap
        out_t[0] = 0.0
        return 0
    n_max = <long>ceil(tmax / dt - 1e-9)
    for k in range(n_max):
        t0 = k * dt
        t1 = t0 + dt
        g_prev = gap
        _advance(&gap, &ve, vt, t0, t1, t_brake, decel)
        if not detected and gap <= d_det:
            t_det = t0 + dt * ((g_prev - d_det) / (g_prev - gap))
            t_brake = t_det + react
            detected = True
            det_gap = d_det
            if t_brake < t1:
                gap = d_det
                _advance(&gap, &ve, vt, t_det, t1, t_brake, decel)
        if gap < min_gap:
            min_gap = gap
        if gap <= 0.0:
            out_det_gap[0] = det_gap
            out_min_gap[0] = 0.0
            out_t[0] = t0 + dt * (g_prev / (g_prev - gap))
            return 1
        if ve == vt:
            out_det_gap[0] = det_gap
            out_min_gap[0] = gap
            out_t[0] = t_brake + (ve0 - vt) / decel
            return 0
    out_det_gap[0] = det_gap
    out_min_gap[0] = min_gap
    out_t[0] = tmax
    out_status[0] = 1
    return 0


def simulate_batch(double[::1] ve_mps, double[::1] vt_mps, double[::1] det_dist,
                   double decel, double react, double gap0, double dt,
                   double tmax):
    """Run the stepping kernel over arrays of scenarios (speeds in m/s)."""
    cdef Py_ssize_t n = ve_mps.shape[0]
    collided_arr = np.zeros(n, dtype=np.uint8)
    det_gap_arr = np.empty(n, dtype=np.float64)
    min_gap_arr = np.empty(n, dtype=np.float64)
    t_out_arr = np.empty(n, dtype=np.float64)
    status_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] collided = collided_arr
    cdef double[::1] det_gap = det_gap_arr
    cdef double[::1] min_gap = min_gap_arr
    cdef double[::1] t_out = t_out_arr
    cdef unsigned char[::1] status = status_arr
    cdef Py_ssize_t i
    cdef int st
    cdef double dg, mg, t
    with nogil:
        for i in range(n):
            collided[i] = <unsigned char>_simulate_one(
                ve_mps[i], vt_mps[i], det_dist[i], decel, react, gap0, dt,
                tmax, &dg, &mg, &t, &st)
            det_gap[i] = dg
            min_gap[i] = mg
            t_out[i] = t
            status[i] = <unsigned char>st
    return collided_arr, det_gap_arr, min_gap_arr, t_out_arr, status_arr


cdef inline void _dist2_col(double[:, ::1] grid, double[:, ::1] pts,
                            Py_ssize_t j, double[::1] out) nogil:
    cdef Py_ssize_t g, k
    cdef Py_ssize_t m = grid.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    cdef double acc, diff
    for g in range(m):
        diff = grid[g, 0] - pts[j, 0]
        acc = diff * diff
        for k in range(1, d):
            diff = grid[g, k] - pts[j, k]
            acc += diff * diff
        out[g] = acc


def minimax_optimize(double[:, ::1] pts, double[:, ::1] grid,
                     long[::1] dims, long[::1] idx_i, long[::1] idx_j):
    """Improve a design toward the minimax criterion by coordinate swaps.

    Same contract as the pure-Python twin: `pts` is modified in place and
    (initial, final) criterion values are returned.
    """
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t m = grid.shape[0]
    d2_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] d2 = d2_arr
    cdef double[::1] rowmin = np.empty(m, dtype=np.float64)
    cdef long[::1] rowarg = np.empty(m, dtype=np.int64)
    cdef double[::1] col_i = np.empty(m, dtype=np.float64)
    cdef double[::1] col_j = np.empty(m, dtype=np.float64)
    cdef double[::1] new_min = np.empty(m, dtype=np.float64)
    cdef long[::1] new_arg = np.empty(m, dtype=np.int64)
    cdef Py_ssize_t t, g, s, i, j, k
    cdef double crit_sq, crit_init, new_crit_sq, best, v, xi, xj
    cdef long barg

    with nogil:
        for j in range(n):
            _dist2_col(grid, pts, j, col_i)
            for g in range(m):
                d2[g, j] = col_i[g]
        for g in range(m):
            best = INFINITY
            barg = 0
            for s in range(n):
                if d2[g, s] < best:
                    best = d2[g, s]
                    barg = s
            rowmin[g] = best
            rowarg[g] = barg
        crit_sq = rowmin[0]
        for g in range(1, m):
            if rowmin[g] > crit_sq:
                crit_sq = rowmin[g]
        crit_init = sqrt(crit_sq)

        for t in range(dims.shape[0]):
            i = idx_i[t]
            j = idx_j[t]
            if i == j:
                continue
            k = dims[t]
            xi = pts[i, k]
            xj = pts[j, k]
            pts[i, k] = xj
            pts[j, k] = xi
            _dist2_col(grid, pts, i, col_i)
            _dist2_col(grid, pts, j, col_j)

            new_crit_sq = -INFINITY
            for g in range(m):
                if rowarg[g] == i or rowarg[g] == j:
                    best = INFINITY
                    barg = 0
                    for s in range(n):
                        if s == i:
                            v = col_i[g]
                        elif s == j:
                            v = col_j[g]
                        else:
                            v = d2[g, s]
                        if v < best:
                            best = v
                            barg = s
                else:
                    best = rowmin[g]
                    barg = rowarg[g]
                    if col_i[g] < best:
                        best = col_i[g]
                        barg = i
                    if col_j[g] < best:
                        best = col_j[g]
                        barg = j
                new_min[g] = best
                new_arg[g] = barg
                if best > new_crit_sq:
                    new_crit_sq = best

            if new_crit_sq < crit_sq:
                for g in range(m):
                    d2[g, i] = col_i[g]
                    d2[g, j] = col_j[g]
                    rowmin[g] = new_min[g]
                    rowarg[g] = new_arg[g]
                crit_sq = new_crit_sq
            else:
                pts[i, k] = xi
                pts[j, k] = xj
    return crit_init, sqrt(crit_sq)
