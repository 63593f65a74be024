"""Pure-Python twin of the compiled kernels.

Selected automatically when the Cython extension is unavailable. Both
implementations perform the same scalar operations in the same order, so
results are bit-identical across backends.
"""

import math

import numpy as np

COMPILED = False


def _advance(gap, ve, vt, t0, t1, t_brake, decel):
    """Advance (gap, ego speed) from t0 to t1.

    Speed is constant before t_brake, then decreases at `decel` until it
    clamps at the target speed. The gap integral is evaluated exactly on
    each linear segment (trapezoid), so gap values carry no step error.
    """
    if ve > vt and t_brake < t1:
        tb = t_brake if t_brake > t0 else t0
        dgap = (ve - vt) * (tb - t0)
        rem = t1 - tb
        h = (ve - vt) / decel
        if h < rem:
            dgap += 0.5 * (ve - vt) * h
            ve = vt
        else:
            ve_new = ve - decel * rem
            dgap += 0.5 * (ve + ve_new - 2.0 * vt) * rem
            ve = ve_new
    else:
        dgap = (ve - vt) * (t1 - t0)
    return gap - dgap, ve


def _simulate_one(ve0, vt, d_det, decel, react, gap0, dt, tmax):
    """One scenario; returns (collided, detection_gap, min_gap, t_out, status).

    status 1 means the episode neither collided nor reached speed match
    within tmax (reported, caller raises).
    """
    ve = ve0
    gap = gap0
    min_gap = gap
    detected = gap <= d_det
    det_gap = gap if detected else math.nan
    t_brake = react if detected else math.inf
    if gap <= 0.0:
        return 1, det_gap, 0.0, 0.0, 0
    if ve == vt:
        return 0, det_gap, gap, 0.0, 0
    n_max = int(math.ceil(tmax / dt - 1e-9))
    for k in range(n_max):
        t0 = k * dt
        t1 = t0 + dt
        g_prev = gap
        gap, ve = _advance(gap, ve, vt, t0, t1, t_brake, decel)
        if not detected and gap <= d_det:
            # pre-braking steps are constant-speed: linear interpolation
            # of the crossing time is exact
            t_det = t0 + dt * ((g_prev - d_det) / (g_prev - gap))
            t_brake = t_det + react
            detected = True
            det_gap = d_det
            if t_brake < t1:
                gap, ve = _advance(d_det, ve, vt, t_det, t1, t_brake, decel)
        if gap < min_gap:
            min_gap = gap
        if gap <= 0.0:
            t_out = t0 + dt * (g_prev / (g_prev - gap))
            return 1, det_gap, 0.0, t_out, 0
        if ve == vt:
            t_out = t_brake + (ve0 - vt) / decel
            return 0, det_gap, gap, t_out, 0
    return 0, det_gap, min_gap, tmax, 1


def simulate_batch(ve_mps, vt_mps, det_dist, decel, react, gap0, dt, tmax):
    """Run the stepping kernel over arrays of scenarios (speeds in m/s)."""
    n = ve_mps.shape[0]
    collided = np.zeros(n, dtype=np.uint8)
    det_gap = np.empty(n, dtype=np.float64)
    min_gap = np.empty(n, dtype=np.float64)
    t_out = np.empty(n, dtype=np.float64)
    status = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        c, dg, mg, t, st = _simulate_one(
            ve_mps[i], vt_mps[i], det_dist[i], decel, react, gap0, dt, tmax
        )
        collided[i] = c
        det_gap[i] = dg
        min_gap[i] = mg
        t_out[i] = t
        status[i] = st
    return collided, det_gap, min_gap, t_out, status


def _dist2_col(grid, pts, j):
    """Squared distances from every reference grid point to sample j."""
    d2 = (grid[:, 0] - pts[j, 0]) ** 2
    for k in range(1, pts.shape[1]):
        d2 += (grid[:, k] - pts[j, k]) ** 2
    return d2


def minimax_optimize(pts, grid, dims, idx_i, idx_j):
    """Improve a design toward the minimax criterion by coordinate swaps.

    `pts` (n, d) is modified in place. Each proposal swaps one coordinate
    between two samples (preserves Latin stratification) and is accepted
    only when the criterion — max over `grid` of the distance to the
    nearest sample — strictly decreases. Returns (initial, final)
    criterion values.
    """
    n = pts.shape[0]
    m = grid.shape[0]
    d2 = np.empty((m, n), dtype=np.float64)
    for j in range(n):
        d2[:, j] = _dist2_col(grid, pts, j)
    rowmin = d2.min(axis=1)
    rowarg = d2.argmin(axis=1)
    crit_sq = rowmin.max()
    crit_init = math.sqrt(crit_sq)

    for t in range(dims.shape[0]):
        i = idx_i[t]
        j = idx_j[t]
        if i == j:
            continue
        k = dims[t]
        xi, xj = pts[i, k], pts[j, k]
        pts[i, k], pts[j, k] = xj, xi
        col_i = _dist2_col(grid, pts, i)
        col_j = _dist2_col(grid, pts, j)

        stale = (rowarg == i) | (rowarg == j)
        new_min = rowmin.copy()
        new_arg = rowarg.copy()
        if stale.any():
            sub = d2[stale]
            sub[:, i] = col_i[stale]
            sub[:, j] = col_j[stale]
            new_min[stale] = sub.min(axis=1)
            new_arg[stale] = sub.argmin(axis=1)
        better_i = col_i < new_min
        new_min = np.where(better_i, col_i, new_min)
        new_arg = np.where(better_i, i, new_arg)
        better_j = col_j < new_min
        new_min = np.where(better_j, col_j, new_min)
        new_arg = np.where(better_j, j, new_arg)

        new_crit_sq = new_min.max()
        if new_crit_sq < crit_sq:
            d2[:, i] = col_i
            d2[:, j] = col_j
            rowmin = new_min
            rowarg = new_arg
            crit_sq = new_crit_sq
        else:
            pts[i, k], pts[j, k] = xi, xj
    return crit_init, math.sqrt(crit_sq)
