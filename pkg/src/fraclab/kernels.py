"""Polyline acceleration index and backend selection.

A PolylineIndex prebuilds two structures over a set of closed boundary
loops: an implicit AABB tree over Morton-sorted segments (nearest-distance
queries) and row-binned segment lists (crossing-parity point location).
Queries run either in the compiled extension fraclab._core or in the numpy
fallback fraclab._kernels_np; both give bit-identical answers.  The
compiled backend is picked automatically when importable, and the
environment variable FRACLAB_BACKEND=compiled|python forces the choice.
"""

from __future__ import annotations

import os

import numpy as np

from fraclab import _kernels_np

try:
    from fraclab import _core
except ImportError:
    _core = None

_env = os.environ.get("FRACLAB_BACKEND", "").strip().lower()
if _env == "python":
    BACKEND = "python"
elif _env == "compiled":
    if _core is None:
        raise ImportError("FRACLAB_BACKEND=compiled but fraclab._core is not built")
    BACKEND = "compiled"
else:
    BACKEND = "compiled" if _core is not None else "python"

LEAF_SIZE = 8
_MAX_ROWS = 1 << 17


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1)).bit_length()


def _spread16(v):
    # 16 low bits of v spread to even bit positions (Morton interleave half)
    v = v.astype(np.uint64)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x33333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x55555555)
    return v


def _morton_order(mx, my):
    x0, x1 = mx.min(), mx.max()
    y0, y1 = my.min(), my.max()
    sx = 65535.0 / (x1 - x0) if x1 > x0 else 0.0
    sy = 65535.0 / (y1 - y0) if y1 > y0 else 0.0
    qx = ((mx - x0) * sx).astype(np.uint64)
    qy = ((my - y0) * sy).astype(np.uint64)
    code = _spread16(qx) | (_spread16(qy) << np.uint64(1))
    return np.argsort(code, kind="stable")


class PolylineIndex:
    """Distance and point-location queries against closed polyline loops.

    segments: (n, 4) array of [ax, ay, bx, by] rows.  For parity queries to
    mean inside/outside, the segments must form closed loops; orientation
    and loop order are irrelevant.
    """

    def __init__(self, segments):
        segs = np.ascontiguousarray(segments, dtype=np.float64)
        if segs.ndim != 2 or segs.shape[1] != 4 or len(segs) == 0:
            raise ValueError("segments must be a nonempty (n, 4) array")
        order = _morton_order(
            (segs[:, 0] + segs[:, 2]) * 0.5, (segs[:, 1] + segs[:, 3]) * 0.5
        )
        segs = segs[order]
        self.n = len(segs)
        self.ax = np.ascontiguousarray(segs[:, 0])
        self.ay = np.ascontiguousarray(segs[:, 1])
        self.bx = np.ascontiguousarray(segs[:, 2])
        self.by = np.ascontiguousarray(segs[:, 3])
        self.ex = np.ascontiguousarray(self.bx - self.ax)
        self.ey = np.ascontiguousarray(self.by - self.ay)
        self.L2 = np.ascontiguousarray(self.ex * self.ex + self.ey * self.ey)
        self.half_max = float(np.sqrt(self.L2.max()) * 0.5)
        self._build_tree()
        self._build_rows()
        self._kdtree = None
        self.ub_vals = np.empty(0)
        self.ub_x0 = self.ub_y0 = self.ub_inv_h = 0.0
        self.ub_nx = self.ub_ny = 0

    # ---- construction ----

    def _build_tree(self):
        n = self.n
        nchunks = -(-n // LEAF_SIZE)
        slots = _next_pow2(nchunks)
        size = 2 * slots
        bx0 = np.full(size, np.inf)
        by0 = np.full(size, np.inf)
        bx1 = np.full(size, -np.inf)
        by1 = np.full(size, -np.inf)
        offs = np.arange(nchunks) * LEAF_SIZE
        sxmin = np.minimum(self.ax, self.bx)
        sxmax = np.maximum(self.ax, self.bx)
        symin = np.minimum(self.ay, self.by)
        symax = np.maximum(self.ay, self.by)
        bx0[slots : slots + nchunks] = np.minimum.reduceat(sxmin, offs)
        by0[slots : slots + nchunks] = np.minimum.reduceat(symin, offs)
        bx1[slots : slots + nchunks] = np.maximum.reduceat(sxmax, offs)
        by1[slots : slots + nchunks] = np.maximum.reduceat(symax, offs)
        lev = slots >> 1
        while lev >= 1:
            lo, hi = lev, 2 * lev
            bx0[lo:hi] = np.minimum(bx0[hi : 2 * hi : 2], bx0[hi + 1 : 2 * hi : 2])
            by0[lo:hi] = np.minimum(by0[hi : 2 * hi : 2], by0[hi + 1 : 2 * hi : 2])
            bx1[lo:hi] = np.maximum(bx1[hi : 2 * hi : 2], bx1[hi + 1 : 2 * hi : 2])
            by1[lo:hi] = np.maximum(by1[hi : 2 * hi : 2], by1[hi + 1 : 2 * hi : 2])
            lev >>= 1
        self.slots = slots
        self.tb_x0, self.tb_y0 = bx0, by0
        self.tb_x1, self.tb_y1 = bx1, by1

    def _build_rows(self):
        ylo = float(np.minimum(self.ay, self.by).min())
        yhi = float(np.maximum(self.ay, self.by).max())
        height = max(yhi - ylo, 1e-300)
        n_rows = _next_pow2(min(max(64, self.n), _MAX_ROWS))
        h = height / n_rows
        inv_h = n_rows / height
        r0 = np.floor((np.minimum(self.ay, self.by) - ylo) * inv_h).astype(np.int64)
        r1 = np.floor((np.maximum(self.ay, self.by) - ylo) * inv_h).astype(np.int64)
        np.clip(r0, 0, n_rows - 1, out=r0)
        np.clip(r1, 0, n_rows - 1, out=r1)
        counts = r1 - r0 + 1
        total = int(counts.sum())
        items_seg = np.repeat(np.arange(self.n, dtype=np.int64), counts)
        offs = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=offs[1:])
        item_rows = r0[items_seg] + (np.arange(total, dtype=np.int64) - offs[items_seg])
        order = np.argsort(item_rows, kind="stable")
        self.row_items = np.ascontiguousarray(items_seg[order])
        row_counts = np.bincount(item_rows, minlength=n_rows)
        self.row_start = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(row_counts, out=self.row_start[1:])
        self.n_rows = n_rows
        self.row_y0 = ylo
        self.row_h = h
        self.row_inv_h = inv_h

    def _ensure_ub(self):
        # lazy coarse grid of exact center distances; seeds the compiled
        # search radius via the triangle inequality
        if self.ub_nx > 0 or _core is None:
            return
        nx = 256 if self.n > 512 else 64
        x0 = float(np.minimum(self.ax, self.bx).min())
        x1 = float(np.maximum(self.ax, self.bx).max())
        y0 = float(np.minimum(self.ay, self.by).min())
        y1 = float(np.maximum(self.ay, self.by).max())
        h = max(x1 - x0, y1 - y0, 1e-300) / nx
        inv_h = 1.0 / h
        ny = max(1, int(np.ceil((y1 - y0) * inv_h)))
        nxx = max(1, int(np.ceil((x1 - x0) * inv_h)))
        cx = x0 + (np.arange(nxx) + 0.5) * h
        cy = y0 + (np.arange(ny) + 0.5) * h
        centers_x = np.tile(cx, ny)
        centers_y = np.repeat(cy, nxx)
        vals = np.empty(nxx * ny)
        _core.polyline_distance(
            centers_x, centers_y,
            self.ax, self.ay, self.ex, self.ey, self.L2,
            self.tb_x0, self.tb_y0, self.tb_x1, self.tb_y1,
            self.slots, LEAF_SIZE, self.n,
            np.empty(0), 0.0, 0.0, 0.0, 0, 0,
            vals,
        )
        self.ub_vals = vals
        self.ub_x0, self.ub_y0 = x0, y0
        self.ub_inv_h = inv_h
        self.ub_nx, self.ub_ny = nxx, ny

    @property
    def kdtree(self):
        if self._kdtree is None:
            from scipy.spatial import cKDTree

            mids = np.column_stack(((self.ax + self.bx) * 0.5, (self.ay + self.by) * 0.5))
            self._kdtree = cKDTree(mids)
        return self._kdtree

    # ---- queries ----

    def distance(self, pts, backend=None):
        """Exact Euclidean distance from each point to the nearest segment."""
        b = backend or BACKEND
        pts = np.ascontiguousarray(pts, dtype=np.float64)
        if b == "compiled":
            self._ensure_ub()
            out = np.empty(len(pts))
            _core.polyline_distance(
                pts[:, 0].copy(), pts[:, 1].copy(),
                self.ax, self.ay, self.ex, self.ey, self.L2,
                self.tb_x0, self.tb_y0, self.tb_x1, self.tb_y1,
                self.slots, LEAF_SIZE, self.n,
                self.ub_vals, self.ub_x0, self.ub_y0,
                self.ub_inv_h, self.ub_nx, self.ub_ny,
                out,
            )
            return out
        return _kernels_np.polyline_distance(self, pts)

    def inside(self, pts, backend=None):
        """Crossing-parity point location: True where the point is enclosed."""
        b = backend or BACKEND
        pts = np.ascontiguousarray(pts, dtype=np.float64)
        if b == "compiled":
            out = np.zeros(len(pts), dtype=np.uint8)
            _core.polyline_parity(
                pts[:, 0].copy(), pts[:, 1].copy(),
                self.ax, self.ay, self.bx, self.by,
                self.row_start, self.row_items,
                self.row_y0, self.row_inv_h, self.n_rows, out,
            )
            return out.astype(bool)
        return _kernels_np.polyline_parity(self, pts)
