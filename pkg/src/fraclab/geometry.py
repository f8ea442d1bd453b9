"""Bounded planar domains as exact distance oracles, plus tube measurements.

A Domain couples an inside-predicate with the exact Euclidean distance to
its generating boundary polyline (or circle).  Everything downstream --
dimension estimation, seminorm quadrature, the density experiments --
consumes domains only through inside(), dist_boundary() and the boundary
sampler, so polygonal prefractals and analytic shapes are interchangeable.

All measurement randomness is counter-based: a (seed, label) pair fully
determines the sample stream, so results are independent of worker count
and call order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fraclab.kernels import PolylineIndex
from fraclab.rng import stream

_SQRT3 = math.sqrt(3.0)

# work cap for grid classification; beyond this the request must error out
# rather than silently coarsen
MAX_GRID_CELLS = 1 << 26


class ResolutionError(ValueError):
    """A grid or prefractal resolution rule cannot be satisfied."""


@dataclass(frozen=True)
class SampleConfig:
    """Estimator sampling plumbing.

    workers is informational only: identical seed and samples give
    bit-identical results regardless of it.
    """

    seed: int = 0
    samples: int = 100_000
    grid_h: float | None = None
    workers: int = 1

    def with_(self, **kw) -> "SampleConfig":
        d = {"seed": self.seed, "samples": self.samples, "grid_h": self.grid_h, "workers": self.workers}
        d.update(kw)
        return SampleConfig(**d)


@dataclass
class TubeMeasurement:
    domain: str
    r: float
    volume: float
    method: str  # "grid" | "montecarlo"
    R: float | None = None
    center: tuple[float, float] | None = None
    samples: int | None = None
    resolution: float | None = None
    stderr: float = 0.0
    seed: int | None = None

    def csv_row(self) -> dict:
        return {
            "domain": self.domain,
            "r": self.r,
            "R": "" if self.R is None else self.R,
            "x_x": "" if self.center is None else self.center[0],
            "x_y": "" if self.center is None else self.center[1],
            "volume": self.volume,
            "stderr": self.stderr,
            "method": self.method,
            "samples": "" if self.samples is None else self.samples,
            "seed": "" if self.seed is None else self.seed,
        }


TUBE_CSV_COLUMNS = ["domain", "r", "R", "x_x", "x_y", "volume", "stderr", "method", "samples", "seed"]


class Domain:
    """Base interface; see DiskDomain / PolygonDomain / ReductionDomain."""

    kind: str
    label: str
    diameter: float
    bbox: tuple[float, float, float, float]
    area_exact: float | None
    perimeter: float
    ambient_dim: int = 2
    # smallest scale at which the boundary is trusted to represent the
    # target geometry (prefractal resolution rule); 0 for exact shapes
    scale_floor: float = 0.0

    def inside(self, pts) -> np.ndarray:
        raise NotImplementedError

    def dist_boundary(self, pts) -> np.ndarray:
        raise NotImplementedError

    def boundary_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points uniform by arc length on the generating boundary."""
        raise NotImplementedError

    def area(self, cfg: SampleConfig | None = None) -> float:
        if self.area_exact is not None:
            return self.area_exact
        cfg = cfg or SampleConfig()
        g = stream(cfg.seed, f"area:{self.label}")
        pts = _bbox_points(self.bbox, cfg.samples, g)
        return _bbox_area(self.bbox) * float(np.mean(self.inside(pts)))

    def inradius(self, cfg: SampleConfig | None = None) -> float:
        """Estimated sup of d_Omega over the interior (exact for disks)."""
        cfg = cfg or SampleConfig()
        g = stream(cfg.seed, f"inradius:{self.label}")
        pts = _bbox_points(self.bbox, cfg.samples, g)
        keep = self.inside(pts)
        if not keep.any():
            raise ValueError(f"no interior samples found for {self.label}")
        return float(self.dist_boundary(pts[keep]).max())


def _bbox_area(bbox) -> float:
    x0, y0, x1, y1 = bbox
    return (x1 - x0) * (y1 - y0)


def _bbox_points(bbox, n, rng) -> np.ndarray:
    x0, y0, x1, y1 = bbox
    u = rng.random((n, 2))
    u[:, 0] = x0 + (x1 - x0) * u[:, 0]
    u[:, 1] = y0 + (y1 - y0) * u[:, 1]
    return u


class DiskDomain(Domain):
    kind = "disk"

    def __init__(self, center=(0.0, 0.0), radius=1.0, label="disk"):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.label = label
        self.diameter = 2 * self.radius
        cx, cy = self.center
        self.bbox = (cx - radius, cy - radius, cx + radius, cy + radius)
        self.area_exact = math.pi * radius * radius
        self.perimeter = 2 * math.pi * radius

    def _rho(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.hypot(p[:, 0] - self.center[0], p[:, 1] - self.center[1])

    def inside(self, pts):
        return self._rho(pts) < self.radius

    def dist_boundary(self, pts):
        return np.abs(self.radius - self._rho(pts))

    def boundary_points(self, n, rng):
        th = rng.random(n) * (2 * math.pi)
        return self.center + self.radius * np.column_stack([np.cos(th), np.sin(th)])

    def inradius(self, cfg=None):
        return self.radius


class PolygonDomain(Domain):
    """Domain bounded by one or more closed polygonal loops."""

    def __init__(self, loops, kind="polygon", label=None, scale_floor=0.0, area_exact=None):
        self.loops = [np.asarray(lp, dtype=float) for lp in loops]
        segs = []
        for lp in self.loops:
            if lp.ndim != 2 or lp.shape[1] != 2 or len(lp) < 2:
                raise ValueError("each loop needs at least 2 vertices of shape (k, 2)")
            nxt = np.roll(lp, -1, axis=0)
            segs.append(np.column_stack([lp, nxt]))
        self._segs = np.vstack(segs)
        self.index = PolylineIndex(self._segs)
        self.kind = kind
        self.label = label or kind
        self.scale_floor = float(scale_floor)
        allv = np.vstack(self.loops)
        self.bbox = (
            float(allv[:, 0].min()), float(allv[:, 1].min()),
            float(allv[:, 0].max()), float(allv[:, 1].max()),
        )
        self.diameter = _hull_diameter(allv)
        seglen = np.hypot(self._segs[:, 2] - self._segs[:, 0], self._segs[:, 3] - self._segs[:, 1])
        self.perimeter = float(seglen.sum())
        self._cumlen = np.concatenate([[0.0], np.cumsum(seglen)])
        shoe = self.shoelace_area()
        self.area_exact = shoe if area_exact is None else float(area_exact)

    def shoelace_area(self) -> float:
        total = 0.0
        for lp in self.loops:
            x, y = lp[:, 0], lp[:, 1]
            xn, yn = np.roll(x, -1), np.roll(y, -1)
            total += 0.5 * float(np.sum(x * yn - xn * y))
        return abs(total)

    def inside(self, pts):
        return self.index.inside(np.atleast_2d(np.asarray(pts, dtype=float)))

    def dist_boundary(self, pts):
        return self.index.distance(np.atleast_2d(np.asarray(pts, dtype=float)))

    def boundary_points(self, n, rng):
        u = rng.random(n) * self._cumlen[-1]
        j = np.searchsorted(self._cumlen, u, side="right") - 1
        np.clip(j, 0, len(self._segs) - 1, out=j)
        seg = self._segs[j]
        denom = self._cumlen[j + 1] - self._cumlen[j]
        t = np.where(denom > 0, (u - self._cumlen[j]) / np.where(denom > 0, denom, 1.0), 0.0)
        return np.column_stack([
            seg[:, 0] + t * (seg[:, 2] - seg[:, 0]),
            seg[:, 1] + t * (seg[:, 3] - seg[:, 1]),
        ])


def _hull_diameter(points) -> float:
    from scipy.spatial import ConvexHull

    if len(points) <= 2:
        d = np.linalg.norm(points[-1] - points[0])
        return float(d)
    hull = points[ConvexHull(points).vertices]
    d2 = ((hull[:, None, :] - hull[None, :, :]) ** 2).sum(-1)
    return float(np.sqrt(d2.max()))


class ReductionDomain(Domain):
    """G = Omega union (R^2 minus closed B(x0, 2M)), M = diam Omega.

    The unbounded piece is clipped to a square box of half-width 8M around
    x0 for measurement purposes; clip_radius records that.  On Omega the
    distance to the boundary of G coincides with the distance to the
    boundary of Omega because the two pieces are at least M apart.
    """

    kind = "reduction"

    def __init__(self, base: Domain, x0):
        x0 = np.asarray(x0, dtype=float)
        if not bool(base.inside(x0[None, :])[0]):
            raise ValueError("x0 must lie inside the base domain")
        self.base = base
        self.x0 = x0
        self.M = base.diameter
        self.ring_radius = 2.0 * self.M
        self.clip_radius = 8.0 * self.M
        self.label = f"reduction_{base.label}"
        c = self.clip_radius
        self.bbox = (x0[0] - c, x0[1] - c, x0[0] + c, x0[1] + c)
        # diameter of the generating boundary (antipodal ring points)
        self.diameter = 2.0 * self.ring_radius
        base_area = base.area_exact
        self.area_exact = (
            None if base_area is None
            else base_area + (2 * c) ** 2 - math.pi * self.ring_radius**2
        )
        self.perimeter = base.perimeter + 2 * math.pi * self.ring_radius
        self.scale_floor = base.scale_floor

    def _ring_dist(self, pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        rho = np.hypot(p[:, 0] - self.x0[0], p[:, 1] - self.x0[1])
        return np.abs(rho - self.ring_radius), rho

    def inside(self, pts):
        ring, rho = self._ring_dist(pts)
        return np.asarray(self.base.inside(pts)) | (rho > self.ring_radius)

    def dist_boundary(self, pts):
        ring, _ = self._ring_dist(pts)
        return np.minimum(np.asarray(self.base.dist_boundary(pts)), ring)

    def boundary_points(self, n, rng):
        ring_per = 2 * math.pi * self.ring_radius
        w = ring_per / (ring_per + self.base.perimeter)
        pick = rng.random(n) < w
        n_ring = int(pick.sum())
        out = np.empty((n, 2))
        th = rng.random(n_ring) * (2 * math.pi)
        out[pick] = self.x0 + self.ring_radius * np.column_stack([np.cos(th), np.sin(th)])
        out[~pick] = self.base.boundary_points(n - n_ring, rng)
        return out


# ---------------------------------------------------------------- factories

def rectangle(x0=0.0, y0=0.0, x1=1.0, y1=1.0, label=None) -> PolygonDomain:
    if not (x1 > x0 and y1 > y0):
        raise ValueError("need x1 > x0 and y1 > y0")
    loop = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
    kind = "rectangle"
    return PolygonDomain([loop], kind=kind, label=label or ("square" if x1 - x0 == y1 - y0 else kind))


def unit_square() -> PolygonDomain:
    return rectangle(0.0, 0.0, 1.0, 1.0)


def koch_prefractal(level: int) -> PolygonDomain:
    """Koch snowflake prefractal: equilateral triangle of side 1, `level`
    substitutions.  3*4^level edges of length 3^-level."""
    if not (0 <= int(level) <= 10):
        raise ValueError("level must be in [0, 10]")
    level = int(level)
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, _SQRT3 / 2]])
    cos, sin = 0.5, -_SQRT3 / 2  # rotate by -60 deg: outward for a ccw loop
    for _ in range(level):
        a = verts
        b = np.roll(verts, -1, axis=0)
        e = (b - a) / 3.0
        p1 = a + e
        p2 = a + 2.0 * e
        tip = np.empty_like(a)
        tip[:, 0] = p1[:, 0] + cos * e[:, 0] - sin * e[:, 1]
        tip[:, 1] = p1[:, 1] + sin * e[:, 0] + cos * e[:, 1]
        verts = np.stack([a, p1, tip, p2], axis=1).reshape(-1, 2)
    area = koch_area(level)
    return PolygonDomain(
        [verts], kind="koch_prefractal", label=f"koch{level}",
        scale_floor=10.0 * 3.0 ** (-level), area_exact=area,
    )


def koch_area(level: int) -> float:
    """sqrt(3)/4 * (1 + (1/3) * sum_{k<level} (4/9)^k)."""
    s = sum((4.0 / 9.0) ** k for k in range(level))
    return _SQRT3 / 4.0 * (1.0 + s / 3.0)


def comb_domain(n_teeth: int = 8, slot_depth: float = 0.75) -> PolygonDomain:
    """Unit square with n vertical slots cut downward from the top edge."""
    if n_teeth < 1:
        raise ValueError("need at least one tooth")
    w = 1.0 / (4.0 * n_teeth)
    path = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]
    y_bot = 1.0 - slot_depth
    for i in reversed(range(n_teeth)):
        cx = (i + 0.5) / n_teeth
        path += [[cx + w / 2, 1.0], [cx + w / 2, y_bot], [cx - w / 2, y_bot], [cx - w / 2, 1.0]]
    path += [[0.0, 1.0]]
    return PolygonDomain([path], kind="comb", label=f"comb{n_teeth}")


def polygon_domain(vertices, label="polygon") -> PolygonDomain:
    return PolygonDomain([vertices], kind="polygon", label=label)


def reduction_domain(domain: Domain, x0=None) -> ReductionDomain:
    """Build G = Omega union far complement; x0 defaults to the bbox center
    when that lies inside Omega, else the first interior hit of a fixed
    sample stream (deterministic)."""
    if x0 is None:
        bx0, by0, bx1, by1 = domain.bbox
        center = np.array([(bx0 + bx1) / 2.0, (by0 + by1) / 2.0])
        if bool(np.asarray(domain.inside(center[None, :]))[0]):
            x0 = center
        else:
            g = stream(0, f"reduction_x0:{domain.label}")
            for _ in range(64):
                pts = _bbox_points(domain.bbox, 1024, g)
                hit = np.asarray(domain.inside(pts))
                if hit.any():
                    x0 = pts[int(np.argmax(hit))]
                    break
            else:
                raise ValueError("could not locate an interior point for x0")
    return ReductionDomain(domain, np.asarray(x0, dtype=float))


# --------------------------------------------------------------- operations

def dist_to_boundary(domain: Domain, x):
    """Exact distance from x (a point or an (n,2) batch) to the boundary."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(domain.dist_boundary(x[None, :])[0])
    return domain.dist_boundary(x)


def inner_tube_volume(domain: Domain, r: float, cfg: SampleConfig, method: str = "montecarlo") -> TubeMeasurement:
    """Area of the inner tube {x in Omega : d_Omega(x) <= r}."""
    if r <= 0:
        raise ValueError("r must be positive")
    if method == "montecarlo":
        g = stream(cfg.seed, f"tube:{domain.label}:{r!r}")
        pts = _bbox_points(domain.bbox, cfg.samples, g)
        hit = np.asarray(domain.inside(pts)) & (domain.dist_boundary(pts) <= r)
        frac = float(hit.mean())
        A = _bbox_area(domain.bbox)
        return TubeMeasurement(
            domain=domain.label, r=r, volume=A * frac, method="montecarlo",
            samples=cfg.samples, stderr=A * math.sqrt(max(frac * (1 - frac), 0.0) / cfg.samples),
            seed=cfg.seed,
        )
    if method == "grid":
        h = cfg.grid_h if cfg.grid_h is not None else r / 8.0
        if h > r / 8.0:
            raise ResolutionError(f"grid_h={h} exceeds r/8={r / 8.0}; refusing to coarsen")
        count, ncells = _grid_count(domain, h, lambda p, d: np.asarray(domain.inside(p)) & (d <= r))
        return TubeMeasurement(
            domain=domain.label, r=r, volume=count * h * h, method="grid",
            samples=ncells, resolution=h, stderr=0.0, seed=cfg.seed,
        )
    raise ValueError(f"unknown method {method!r}")


def _grid_count(domain: Domain, h: float, classify) -> tuple[int, int]:
    """Count grid cells (classified at centers) satisfying the predicate."""
    x0, y0, x1, y1 = domain.bbox
    nx = int(math.ceil((x1 - x0) / h))
    ny = int(math.ceil((y1 - y0) / h))
    if nx * ny > MAX_GRID_CELLS:
        raise ResolutionError(
            f"grid of {nx}x{ny} cells at h={h} exceeds the cap of {MAX_GRID_CELLS}"
        )
    xs = x0 + h * (np.arange(nx) + 0.5)
    count = 0
    rows_per_chunk = max(1, (1 << 22) // max(nx, 1))
    for j0 in range(0, ny, rows_per_chunk):
        ys = y0 + h * (np.arange(j0, min(ny, j0 + rows_per_chunk)) + 0.5)
        P = np.column_stack([np.repeat(xs, len(ys)), np.tile(ys, nx)])
        d = domain.dist_boundary(P)
        count += int(classify(P, d).sum())
    return count, nx * ny


def ball_tube_profile(domain: Domain, x, R: float, r_list, cfg: SampleConfig) -> list[TubeMeasurement]:
    """Two-sided tube volumes inside B(x, R) for several nested r.

    One shared sample batch serves every r, so the volumes are nested and
    nondecreasing by construction and slope estimates see correlated noise.
    """
    x = np.asarray(x, dtype=float)
    r_arr = np.asarray(r_list, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr >= R):
        raise ValueError("need 0 < r < R for every r")
    if not R < domain.diameter:
        raise ValueError("need R < diameter")
    g = stream(cfg.seed, f"balltube:{domain.label}:{x[0]!r},{x[1]!r}:{R!r}")
    u = g.random((cfg.samples, 2))
    rho = R * np.sqrt(u[:, 0])
    th = 2 * math.pi * u[:, 1]
    pts = x[None, :] + np.column_stack([rho * np.cos(th), rho * np.sin(th)])
    d = domain.dist_boundary(pts)
    A = math.pi * R * R
    out = []
    for r in r_arr:
        frac = float((d <= r).mean())
        out.append(TubeMeasurement(
            domain=domain.label, r=float(r), R=float(R), center=(float(x[0]), float(x[1])),
            volume=A * frac, method="montecarlo", samples=cfg.samples,
            stderr=A * math.sqrt(max(frac * (1 - frac), 0.0) / cfg.samples), seed=cfg.seed,
        ))
    return out


def boundary_tube_ball_volume(domain: Domain, x, r: float, R: float, cfg: SampleConfig,
                              method: str = "montecarlo") -> TubeMeasurement:
    """Area of {y : dist(y, boundary) <= r} intersected with B(x, R)."""
    x = np.asarray(x, dtype=float)
    if not (0 < r < R < domain.diameter):
        raise ValueError("need 0 < r < R < diameter")
    snap = 1e-7 * (1.0 + domain.diameter)
    if float(dist_to_boundary(domain, x)) > snap:
        raise ValueError("x is not on the boundary (snap tolerance exceeded)")
    if method == "montecarlo":
        return ball_tube_profile(domain, x, R, [r], cfg)[0]
    if method == "grid":
        h = cfg.grid_h if cfg.grid_h is not None else r / 8.0
        if h > r / 8.0:
            raise ResolutionError(f"grid_h={h} exceeds r/8={r / 8.0}; refusing to coarsen")
        x0b, y0b = x[0] - R, x[1] - R
        n = int(math.ceil(2 * R / h))
        if n * n > MAX_GRID_CELLS:
            raise ResolutionError(f"grid of {n}x{n} cells at h={h} exceeds the cap")
        xs = x0b + h * (np.arange(n) + 0.5)
        ys = y0b + h * (np.arange(n) + 0.5)
        count = 0
        rows = max(1, (1 << 22) // n)
        for j0 in range(0, n, rows):
            yy = ys[j0 : j0 + rows]
            P = np.column_stack([np.repeat(xs, len(yy)), np.tile(yy, n)])
            inball = (P[:, 0] - x[0]) ** 2 + (P[:, 1] - x[1]) ** 2 <= R * R
            d = domain.dist_boundary(P)
            count += int((inball & (d <= r)).sum())
        return TubeMeasurement(
            domain=domain.label, r=r, R=R, center=(float(x[0]), float(x[1])),
            volume=count * h * h, method="grid", samples=n * n, resolution=h, seed=cfg.seed,
        )
    raise ValueError(f"unknown method {method!r}")


@dataclass
class PlumpnessReport:
    kappa: float
    passed: bool
    worst_ratio: float
    worst_witness: tuple[tuple[float, float], float]  # (x, r)
    n_centers: int
    n_scales: int
    details: list = field(default_factory=list)


def plumpness_check(domain: Domain, kappa: float, cfg: SampleConfig,
                    n_centers: int = 48, n_scales: int = 16) -> PlumpnessReport:
    """Certificate search for kappa-plumpness at sampled centers and scales.

    For each boundary/interior center x and radius r the search scans 64
    directions x 16 offsets for z in closed B(x, r) with B(z, kappa*r)
    inside Omega.  A pass certifies the sampled scales only.
    """
    if not (0 < kappa < 1):
        raise ValueError("kappa must be in (0, 1)")
    g = stream(cfg.seed, f"plump:{domain.label}")
    nb = max(1, n_centers * 3 // 4)
    centers = np.vstack([
        domain.boundary_points(nb, g),
        _interior_points(domain, n_centers - nb, g),
    ])
    radii = np.geomspace(domain.diameter / 128.0, domain.diameter * 0.98, n_scales)
    th = 2 * math.pi * np.arange(64) / 64.0
    dirs = np.column_stack([np.cos(th), np.sin(th)])
    offs = np.arange(1, 17) / 16.0
    # candidate offsets: 64 directions x 16 radii, plus the center itself
    disp = np.concatenate([np.zeros((1, 2)), (offs[:, None, None] * dirs[None, :, :]).reshape(-1, 2)])
    worst = (math.inf, None)
    details = []
    for r in radii:
        cand = centers[:, None, :] + r * disp[None, :, :]  # (nc, 1025, 2)
        flat = cand.reshape(-1, 2)
        ok = np.asarray(domain.inside(flat))
        clear = np.where(ok, domain.dist_boundary(flat), 0.0).reshape(len(centers), -1)
        best = clear.max(axis=1) / r
        i = int(np.argmin(best))
        details.append((float(r), float(best.min())))
        if best[i] < worst[0]:
            worst = (float(best[i]), ((float(centers[i, 0]), float(centers[i, 1])), float(r)))
    return PlumpnessReport(
        kappa=kappa, passed=worst[0] >= kappa, worst_ratio=worst[0],
        worst_witness=worst[1], n_centers=len(centers), n_scales=n_scales, details=details,
    )


def _interior_points(domain: Domain, n: int, rng) -> np.ndarray:
    if n <= 0:
        return np.empty((0, 2))
    out = []
    got = 0
    while got < n:
        pts = _bbox_points(domain.bbox, max(4 * n, 256), rng)
        pts = pts[np.asarray(domain.inside(pts))]
        out.append(pts[: n - got])
        got += len(out[-1])
    return np.vstack(out)
