"""Pure numpy/scipy implementations of the polyline query kernels.

These mirror fraclab._core operation for operation.  The arithmetic is kept
in the same order as the C code so both backends return bit-identical
results (the extension is compiled with FMA contraction disabled).
"""

from __future__ import annotations

import numpy as np


def seg_dist2(px, py, ax, ay, ex, ey, L2):
    """Squared distance from points to segments, elementwise.

    ax, ay are segment starts, (ex, ey) the edge vectors, L2 = ex^2 + ey^2.
    All arrays broadcast together.
    """
    num = (px - ax) * ex + (py - ay) * ey
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / L2
    t = np.where(L2 > 0.0, t, 0.0)
    t = np.clip(t, 0.0, 1.0)
    dx = px - (ax + t * ex)
    dy = py - (ay + t * ey)
    return dx * dx + dy * dy


def brute_distance(segs, pts, chunk=2**22):
    """Reference: exact distance by scanning every segment. O(n_pts * n_segs)."""
    segs = np.asarray(segs, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    ax, ay, bx, by = segs.T
    ex, ey = bx - ax, by - ay
    L2 = ex * ex + ey * ey
    n = len(pts)
    out = np.empty(n)
    step = max(1, chunk // max(1, len(segs)))
    for i in range(0, n, step):
        p = pts[i : i + step]
        d2 = seg_dist2(p[:, 0:1], p[:, 1:2], ax, ay, ex, ey, L2)
        out[i : i + step] = np.sqrt(d2.min(axis=1))
    return out


def polyline_distance(index, pts):
    """Exact distance to the polyline via a two-phase KD-tree search.

    Phase 1: the nearest segment midpoint gives an upper bound d_ub
    (exact distance to that one segment).  Phase 2: any segment that can
    beat d_ub has its midpoint within d_ub + half_max of the query, so a
    ball query plus an exact narrow phase over the candidates is complete.
    """
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    n = len(pts)
    if n == 0:
        return np.empty(0)
    tree = index.kdtree
    _, j0 = tree.query(pts, k=1)
    px, py = pts[:, 0], pts[:, 1]
    d2_0 = seg_dist2(px, py, index.ax[j0], index.ay[j0], index.ex[j0], index.ey[j0], index.L2[j0])
    dub = np.sqrt(d2_0)
    cand = tree.query_ball_point(pts, dub + index.half_max)
    counts = np.fromiter((len(c) for c in cand), dtype=np.int64, count=n)
    flat = np.concatenate([np.asarray(c, dtype=np.int64) for c in cand])
    rep = np.repeat(np.arange(n), counts)
    d2 = seg_dist2(
        px[rep], py[rep], index.ax[flat], index.ay[flat], index.ex[flat], index.ey[flat], index.L2[flat]
    )
    offs = np.zeros(n, dtype=np.int64)
    np.cumsum(counts[:-1], out=offs[1:])
    best = np.minimum.reduceat(d2, offs)
    # every ball holds at least the phase-1 segment, but guard regardless
    best = np.minimum(best, d2_0)
    return np.sqrt(best)


def polyline_parity(index, pts, chunk_pairs=2**24):
    """Crossing-number parity (odd = inside) using row-binned segments."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    n = len(pts)
    out = np.zeros(n, dtype=bool)
    if n == 0:
        return out
    px, py = pts[:, 0], pts[:, 1]
    rows = np.floor((py - index.row_y0) * index.row_inv_h).astype(np.int64)
    np.clip(rows, 0, index.n_rows - 1, out=rows)
    order = np.argsort(rows, kind="stable")
    rs = rows[order]
    # walk runs of equal row
    starts = np.flatnonzero(np.r_[True, rs[1:] != rs[:-1]])
    ends = np.r_[starts[1:], n]
    for i0, i1 in zip(starts, ends):
        r = rs[i0]
        items = index.row_items[index.row_start[r] : index.row_start[r + 1]]
        if len(items) == 0:
            continue
        idx = order[i0:i1]
        ay, by = index.ay[items], index.by[items]
        ax, bx = index.ax[items], index.bx[items]
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = (bx - ax) / (by - ay)
        step = max(1, chunk_pairs // max(1, len(items)))
        for j in range(0, len(idx), step):
            sel = idx[j : j + step]
            yy = py[sel][:, None]
            straddle = (ay[None, :] > yy) != (by[None, :] > yy)
            xi = ax[None, :] + (yy - ay[None, :]) * slope[None, :]
            cross = straddle & (px[sel][:, None] < xi)
            out[sel] = (cross.sum(axis=1) & 1).astype(bool)
    return out
