"""Scalar fields, Gagliardo seminorms, cutoffs and Hardy quotients.

The seminorm estimator draws pairs (x, y = x + rho*omega) with rho
log-uniform on [rho_min, diam] and omega uniform on the circle; the
importance weight makes it unbiased for the double integral truncated at
|x - y| >= rho_min, and the near-diagonal tail is bounded analytically
from a declared Holder modulus.  All estimators consume a fixed number of
uniforms per sample in a fixed order, so results depend only on
(seed, label, samples), never on chunking or workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from fraclab.geometry import Domain, SampleConfig, _bbox_area, _bbox_points
from fraclab.rng import stream

_CHUNK = 1 << 19

# shell-slope thresholds for the divergence diagnosis of hardy_quotient:
# log2 contributions sloping below DECAY_SLOPE are geometric decay, above
# GROWTH_SLOPE they fail to decay; in between is borderline
DECAY_SLOPE = -0.2
GROWTH_SLOPE = -0.05
HARDY_SHELLS = 40
_MIN_SHELL_COUNT = 50


@dataclass(frozen=True)
class SobolevParams:
    s: float
    p: float

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"order s={self.s} outside (0, 1)")
        if not self.p >= 1.0:
            raise ValueError(f"integrability p={self.p} below 1")

    @property
    def sp(self) -> float:
        return self.s * self.p


@dataclass
class ScalarField:
    """Real-valued function on a domain.

    holder, when present, declares |f(x)-f(y)| <= L |x-y|^alpha as (L, alpha);
    known_bound declares sup |f|.  Both feed the analytic tail bounds.
    """

    evaluator: Callable
    label: str
    known_bound: float | None = None
    holder: tuple[float, float] | None = None

    def __call__(self, pts) -> np.ndarray:
        return np.asarray(self.evaluator(np.atleast_2d(pts)), dtype=float)


def const_field(c: float, label: str | None = None) -> ScalarField:
    return ScalarField(lambda pts: np.full(len(pts), float(c)), label or f"const{c:g}",
                       known_bound=abs(float(c)), holder=(0.0, 1.0))


def indicator_field() -> ScalarField:
    """The indicator of Omega, restricted to Omega: identically 1 there."""
    f = const_field(1.0)
    f.label = "indicator"
    return f


def coord_field(axis: int = 0, label: str | None = None) -> ScalarField:
    return ScalarField(lambda pts: pts[:, axis].astype(float), label or f"coord_x{axis + 1}",
                       holder=(1.0, 1.0))


def dist_field(domain: Domain) -> ScalarField:
    return ScalarField(lambda pts: np.asarray(domain.dist_boundary(pts), dtype=float),
                       f"dist_{domain.label}", holder=(1.0, 1.0))


def dist_power_field(domain: Domain, q: float) -> ScalarField:
    """d_Omega^q; Holder modulus declared for q <= 1 (|a^q - b^q| <= |a-b|^q)."""
    if q <= 0:
        raise ValueError("q must be positive")
    ev = lambda pts: np.asarray(domain.dist_boundary(pts), dtype=float) ** q
    hold = (1.0, q) if q <= 1.0 else None
    return ScalarField(ev, f"distpow{q:g}_{domain.label}", holder=hold)


def cutoff_vn(n: int, d_omega):
    """v_n = max(min(2 - n*d, 1), 0): 1 within 1/n of the boundary, 0 beyond 2/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = np.asarray(d_omega, dtype=float)
    out = np.maximum(np.minimum(2.0 - n * d, 1.0), 0.0)
    return float(out) if np.isscalar(d_omega) else out


def cutoff_field(domain: Domain, n: int) -> ScalarField:
    return ScalarField(lambda pts: cutoff_vn(n, domain.dist_boundary(pts)),
                       f"v{n}_{domain.label}", known_bound=1.0, holder=(float(n), 1.0))


def scale_field(f: ScalarField, c: float) -> ScalarField:
    b = None if f.known_bound is None else abs(c) * f.known_bound
    h = None if f.holder is None else (abs(c) * f.holder[0], f.holder[1])
    return ScalarField(lambda pts: c * f(pts), f"{c:g}*{f.label}", known_bound=b, holder=h)


def sum_field(f: ScalarField, g: ScalarField) -> ScalarField:
    b = None if f.known_bound is None or g.known_bound is None else f.known_bound + g.known_bound
    h = None
    if f.holder and g.holder and f.holder[1] == g.holder[1]:
        h = (f.holder[0] + g.holder[0], f.holder[1])
    return ScalarField(lambda pts: f(pts) + g(pts), f"{f.label}+{g.label}", known_bound=b, holder=h)


def product_field(f: ScalarField, g: ScalarField) -> ScalarField:
    b = None if f.known_bound is None or g.known_bound is None else f.known_bound * g.known_bound
    h = None
    if (f.holder and g.holder and f.holder[1] == 1.0 and g.holder[1] == 1.0
            and f.known_bound is not None and g.known_bound is not None):
        h = (f.holder[0] * g.known_bound + g.holder[0] * f.known_bound, 1.0)
    return ScalarField(lambda pts: f(pts) * g(pts), f"{f.label}*{g.label}", known_bound=b, holder=h)


def truncate_clip(f: ScalarField, N: float) -> ScalarField:
    """f^N = min(max(f, -N), N); a 1-Lipschitz composition."""
    if N <= 0:
        raise ValueError("N must be positive")
    b = N if f.known_bound is None else min(f.known_bound, N)
    return ScalarField(lambda pts: np.minimum(np.maximum(f(pts), -N), N),
                       f"trunc{N:g}_{f.label}", known_bound=b, holder=f.holder)


def clip01(g: ScalarField) -> ScalarField:
    """max(min(g, 1), 0); contracts pairwise differences."""
    return ScalarField(lambda pts: np.minimum(np.maximum(g(pts), 0.0), 1.0),
                       f"clip01_{g.label}", known_bound=1.0, holder=g.holder)


@dataclass
class MeasuredValue:
    value: float
    stderr: float
    samples: int


@dataclass
class SeminormEstimate:
    value_p: float
    stderr: float
    samples: int
    method: str  # "montecarlo" | "grid"
    s: float
    p: float
    domain: str
    field_label: str = ""
    rho_min: float | None = None
    bias_bound: float = 0.0
    seed: int | None = None

    def csv_row(self, quantity: str = "seminorm_p", diverged: str = "") -> dict:
        return {
            "domain": self.domain, "field_label": self.field_label, "s": self.s, "p": self.p,
            "quantity": quantity, "value": self.value_p, "stderr": self.stderr,
            "samples": self.samples, "rho_min": "" if self.rho_min is None else self.rho_min,
            "bias_bound": self.bias_bound, "diverged": diverged,
            "seed": "" if self.seed is None else self.seed,
        }


SOBOLEV_CSV_COLUMNS = [
    "domain", "field_label", "s", "p", "quantity", "value", "stderr",
    "samples", "rho_min", "bias_bound", "diverged", "seed",
]


def lp_norm_p(f: ScalarField, domain: Domain, p: float, cfg: SampleConfig) -> MeasuredValue:
    """Integral of |f|^p over Omega by Monte Carlo with inside rejection."""
    if p < 1:
        raise ValueError("p must be >= 1")
    g = stream(cfg.seed, f"lp:{domain.label}:{f.label}:{p!r}")
    A = _bbox_area(domain.bbox)
    n = cfg.samples
    tot = totsq = 0.0
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        pts = _bbox_points(domain.bbox, m, g)
        vals = np.where(np.asarray(domain.inside(pts)), np.abs(f(pts)) ** p, 0.0)
        tot += float(vals.sum())
        totsq += float((vals * vals).sum())
        done += m
    mean = tot / n
    var = max(totsq / n - mean * mean, 0.0)
    return MeasuredValue(A * mean, A * math.sqrt(var / n), n)


def _holder_tail_bound(f: ScalarField, area: float, sp: float, p: float, rho_min: float) -> float:
    """Bound the omitted |x-y| < rho_min part of the seminorm integral.

    Uses |f(x)-f(y)| <= min(L |x-y|^alpha, 2 sup|f|).  Infinite when no
    modulus is declared (honest ignorance for jump fields) unless L = 0.
    """
    if f.holder is None:
        return math.inf
    L, alpha = f.holder
    if L == 0.0:
        return 0.0
    ap = alpha * p
    if ap <= sp:
        return math.inf
    B = f.known_bound
    front = area * 2.0 * math.pi
    if B is None or L * rho_min**alpha <= 2.0 * B:
        return front * L**p * rho_min ** (ap - sp) / (ap - sp)
    rho_star = (2.0 * B / L) ** (1.0 / alpha)
    part1 = L**p * rho_star ** (ap - sp) / (ap - sp)
    part2 = (2.0 * B) ** p * (rho_star ** (-sp) - rho_min ** (-sp)) / sp
    return front * (part1 + part2)


def gagliardo_seminorm_p(f: ScalarField, domain: Domain, params: SobolevParams,
                         cfg: SampleConfig, rho_min: float | None = None,
                         method: str = "montecarlo", grid_n: int = 48,
                         region: Callable | None = None) -> SeminormEstimate:
    """[f]^p_{W^{s,p}} over Omega x Omega (optionally restricted by `region`).

    montecarlo: the log-uniform radial pair sampler described in the module
    docstring.  grid: deterministic midpoint double sum with recursive
    refinement of near-diagonal cell pairs.
    """
    sp = params.sp
    diam = domain.diameter
    if rho_min is None:
        rho_min = diam * 1e-5
    if not (0.0 < rho_min < diam):
        raise ValueError("need 0 < rho_min < diam")
    if method == "grid":
        return _grid_seminorm(f, domain, params, grid_n, region)
    if method != "montecarlo":
        raise ValueError(f"unknown method {method!r}")
    g = stream(cfg.seed, f"seminorm:{domain.label}:{f.label}:{params.s!r}:{params.p!r}:{rho_min!r}")
    A = _bbox_area(domain.bbox)
    logspan = math.log(diam / rho_min)
    W = A * 2.0 * math.pi * logspan
    n = cfg.samples
    tot = totsq = 0.0
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        u = g.random((m, 4))
        x = np.empty((m, 2))
        x0, y0, x1, y1 = domain.bbox
        x[:, 0] = x0 + (x1 - x0) * u[:, 0]
        x[:, 1] = y0 + (y1 - y0) * u[:, 1]
        rho = rho_min * np.exp(logspan * u[:, 2])
        th = 2.0 * math.pi * u[:, 3]
        y = x + np.column_stack([rho * np.cos(th), rho * np.sin(th)])
        keep = np.asarray(domain.inside(x)) & np.asarray(domain.inside(y))
        if region is not None:
            keep &= np.asarray(region(x)) & np.asarray(region(y))
        df = np.where(keep, np.abs(f(x) - f(y)), 0.0)
        vals = W * df**params.p * rho ** (-sp)
        if not np.isfinite(vals).all():
            raise ValueError("nonfinite field samples in seminorm estimator")
        tot += float(vals.sum())
        totsq += float((vals * vals).sum())
        done += m
    mean = tot / n
    var = max(totsq / n - mean * mean, 0.0)
    area = domain.area() if domain.area_exact is not None else A
    return SeminormEstimate(
        value_p=mean, stderr=math.sqrt(var / n), samples=n, method="montecarlo",
        s=params.s, p=params.p, domain=domain.label, field_label=f.label,
        rho_min=rho_min, bias_bound=_holder_tail_bound(f, area, sp, params.p, rho_min),
        seed=cfg.seed,
    )


def _grid_seminorm(f: ScalarField, domain: Domain, params: SobolevParams,
                   n_side: int, region: Callable | None) -> SeminormEstimate:
    sp = params.sp
    p = params.p
    x0, y0, x1, y1 = domain.bbox
    h = max(x1 - x0, y1 - y0) / n_side
    nx = int(math.ceil((x1 - x0) / h))
    ny = int(math.ceil((y1 - y0) / h))
    cx = x0 + (np.arange(nx) + 0.5) * h
    cy = y0 + (np.arange(ny) + 0.5) * h
    P = np.column_stack([np.repeat(cx, ny), np.tile(cy, nx)])
    keep = np.asarray(domain.inside(P))
    if region is not None:
        keep &= np.asarray(region(P))
    P = P[keep]
    vals = f(P)
    if not np.isfinite(vals).all():
        raise ValueError("nonfinite field samples in seminorm grid")
    m = len(P)
    total = 0.0
    near_i: list[np.ndarray] = []
    near_j: list[np.ndarray] = []
    near_cut = 2.5 * h
    chunk = max(1, (1 << 22) // max(m, 1))
    for i0 in range(0, m, chunk):
        dx = P[i0 : i0 + chunk, None, 0] - P[None, :, 0]
        dy = P[i0 : i0 + chunk, None, 1] - P[None, :, 1]
        r = np.hypot(dx, dy)
        dfp = np.abs(vals[i0 : i0 + chunk, None] - vals[None, :]) ** p
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = dfp * r ** (-(2.0 + sp))
        far = r >= near_cut
        total += float(np.where(far, contrib, 0.0).sum()) * h**4
        ii, jj = np.nonzero(~far)
        near_i.append(ii + i0)
        near_j.append(jj)
    total += _refine_pairs(f, P[np.concatenate(near_i)], P[np.concatenate(near_j)],
                           h, p, sp, depth=4)
    return SeminormEstimate(
        value_p=total, stderr=0.0, samples=m * m, method="grid", s=params.s, p=params.p,
        domain=domain.label, field_label=f.label, rho_min=None, bias_bound=0.0,
    )


def _refine_pairs(f, ci, cj, h, p, sp, depth) -> float:
    """Midpoint value of the pair integral over batches of h-cell pairs,
    splitting both cells 2x2 wherever the separation is under 1.5 cells;
    the deepest still-close cores are dropped (their contribution vanishes
    with depth for Holder fields)."""
    sub = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
    cap = 1 << 17  # pairs per batch; the close set grows ~4^level along the diagonal
    total = 0.0
    work = [(ci, cj, h, depth)]
    while work:
        ci, cj, h, depth = work.pop()
        if len(ci) == 0 or depth == 0:
            continue
        if len(ci) > cap:
            work.append((ci[cap:], cj[cap:], h, depth))
            ci, cj = ci[:cap], cj[:cap]
        off = h / 4.0
        xi = (ci[:, None, :] + off * sub[None, :, :]).reshape(-1, 2)
        yj = (cj[:, None, :] + off * sub[None, :, :]).reshape(-1, 2)
        fi = f(xi).reshape(-1, 4)
        fj = f(yj).reshape(-1, 4)
        xi = xi.reshape(-1, 4, 2)
        yj = yj.reshape(-1, 4, 2)
        dx = xi[:, :, None, 0] - yj[:, None, :, 0]
        dy = xi[:, :, None, 1] - yj[:, None, :, 1]
        r = np.hypot(dx, dy)
        dfp = np.abs(fi[:, :, None] - fj[:, None, :]) ** p
        hh = h / 2.0
        close = r < 1.5 * hh
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = dfp * r ** (-(2.0 + sp)) * hh**4
        total += float(np.where(close, 0.0, contrib).sum())
        k, a, b = np.nonzero(close)
        work.append((xi[k, a], yj[k, b], hh, depth - 1))
    return total


@dataclass
class Lemma1Report:
    n: int
    lhs: float
    term_mass: float
    term_semi: float
    implied_C: float
    lhs_stderr: float = 0.0
    mass_stderr: float = 0.0
    semi_stderr: float = 0.0
    domain: str = ""
    s: float = 0.0
    p: float = 0.0
    seed: int | None = None


def lemma1_check(f: ScalarField, domain: Domain, params: SobolevParams, n: int,
                 cfg: SampleConfig) -> Lemma1Report:
    """Measure [f v_n]^p against n^{sp} * mass + seminorm, both over the
    3/n inner tube, with one sampler config."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if 3.0 / n >= domain.diameter:
        raise ValueError("tube width 3/n must be below the diameter")
    sp = params.sp
    vn = cutoff_field(domain, n)
    fvn = product_field(f, vn) if f.label != "indicator" else _relabel(vn, f"{f.label}*v{n}")
    rho_min = domain.diameter * 1e-7 / n
    lhs = gagliardo_seminorm_p(fvn, domain, params, cfg, rho_min=rho_min)
    tube = lambda pts: np.asarray(domain.dist_boundary(pts)) <= 3.0 / n
    g = stream(cfg.seed, f"lem1mass:{domain.label}:{f.label}:{n}")
    A = _bbox_area(domain.bbox)
    tot = totsq = 0.0
    done = 0
    while done < cfg.samples:
        m = min(_CHUNK, cfg.samples - done)
        pts = _bbox_points(domain.bbox, m, g)
        w = np.where(np.asarray(domain.inside(pts)) & tube(pts), np.abs(f(pts)) ** params.p, 0.0)
        tot += float(w.sum())
        totsq += float((w * w).sum())
        done += m
    mass_mean = tot / cfg.samples
    mass_var = max(totsq / cfg.samples - mass_mean * mass_mean, 0.0)
    if mass_mean == 0.0:
        raise ValueError("degenerate tube: measured |f|^p mass over Omega_{3/n} is zero")
    term_mass = n**sp * A * mass_mean
    mass_se = n**sp * A * math.sqrt(mass_var / cfg.samples)
    if f.holder is not None and f.holder[0] == 0.0:
        semi = SeminormEstimate(0.0, 0.0, 0, "montecarlo", params.s, params.p, domain.label)
    else:
        semi = gagliardo_seminorm_p(f, domain, params, cfg, rho_min=rho_min, region=tube)
    denom = term_mass + semi.value_p
    return Lemma1Report(
        n=n, lhs=lhs.value_p, term_mass=term_mass, term_semi=semi.value_p,
        implied_C=lhs.value_p / denom if denom > 0 else math.inf,
        lhs_stderr=lhs.stderr, mass_stderr=mass_se, semi_stderr=semi.stderr,
        domain=domain.label, s=params.s, p=params.p, seed=cfg.seed,
    )


def _relabel(fld: ScalarField, label: str) -> ScalarField:
    return ScalarField(fld.evaluator, label, known_bound=fld.known_bound, holder=fld.holder)


@dataclass
class HardyEstimate:
    value: float
    stderr: float
    samples: int
    diverged: bool
    borderline: bool
    shell_slope: float | None
    shells: list  # (k, contribution, count)
    sp: float = 0.0
    domain: str = ""
    field_label: str = ""
    seed: int | None = None


def hardy_quotient(f: ScalarField, domain: Domain, params: SobolevParams,
                   cfg: SampleConfig, n_shells: int = HARDY_SHELLS) -> HardyEstimate:
    """Integral of |f|^p d_Omega^{-sp} with dyadic-shell diagnosis.

    One uniform batch is post-stratified into shells d in (delta0 2^{-k-1},
    delta0 2^{-k}]; the shell contributions sum to the plain estimate
    exactly, and the slope of log2(I_k) over the last populated shells
    flags divergence (growth) versus geometric decay.
    """
    sp = params.sp
    delta0 = domain.inradius(cfg)
    g = stream(cfg.seed, f"hardy:{domain.label}:{f.label}:{params.s!r}:{params.p!r}")
    A = _bbox_area(domain.bbox)
    n = cfg.samples
    shell_sum = np.zeros(n_shells + 1)
    shell_cnt = np.zeros(n_shells + 1, dtype=np.int64)
    tot = totsq = 0.0
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        pts = _bbox_points(domain.bbox, m, g)
        ins = np.asarray(domain.inside(pts))
        d = np.asarray(domain.dist_boundary(pts))
        with np.errstate(divide="ignore"):
            w = np.where(ins & (d > 0), np.abs(f(pts)) ** params.p * d ** (-sp), 0.0)
        tot += float(w.sum())
        totsq += float((w * w).sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.floor(-np.log2(np.where(ins & (d > 0), d, np.nan) / delta0))
        k = np.where(np.isfinite(k), np.clip(k, 0, n_shells), n_shells).astype(np.int64)
        sel = ins & (d > 0)
        np.add.at(shell_sum, k[sel], w[sel])
        np.add.at(shell_cnt, k[sel], 1)
        done += m
    mean = tot / n
    var = max(totsq / n - mean * mean, 0.0)
    contribs = A * shell_sum / n
    populated = [k for k in range(n_shells + 1) if shell_cnt[k] >= _MIN_SHELL_COUNT]
    slope = None
    diverged = False
    borderline = False
    if len(populated) >= 3:
        ks = np.array(populated[-8:], dtype=float)
        logc = np.log2(contribs[populated[-8:]])
        slope = float(np.polyfit(ks, logc, 1)[0])
        diverged = slope > GROWTH_SLOPE
        borderline = (not diverged) and slope > DECAY_SLOPE
    return HardyEstimate(
        value=A * mean, stderr=A * math.sqrt(var / n), samples=n, diverged=diverged,
        borderline=borderline, shell_slope=slope,
        shells=[(k, float(contribs[k]), int(shell_cnt[k])) for k in range(n_shells + 1)],
        sp=sp, domain=domain.label, field_label=f.label, seed=cfg.seed,
    )


def hardy_rhs_localized(u: ScalarField, domain: Domain, phi, R_loc: float, p: float,
                        cfg: SampleConfig) -> MeasuredValue:
    """Localized double integral of |u(x)-u(y)|^p / (phi(d(x)) d(x)^d) with
    y uniform in Omega intersect B(x, R_loc*d(x))."""
    if R_loc <= 0:
        raise ValueError("R_loc must be positive")
    phi_ev = phi if callable(phi) else phi.evaluate
    g = stream(cfg.seed, f"hardyrhs:{domain.label}:{u.label}:{R_loc!r}:{p!r}")
    A = _bbox_area(domain.bbox)
    n = cfg.samples
    tot = totsq = 0.0
    done = 0
    x0, y0b, x1, y1b = domain.bbox
    while done < n:
        m = min(_CHUNK, n - done)
        uu = g.random((m, 4))
        x = np.empty((m, 2))
        x[:, 0] = x0 + (x1 - x0) * uu[:, 0]
        x[:, 1] = y0b + (y1b - y0b) * uu[:, 1]
        ins_x = np.asarray(domain.inside(x))
        d = np.asarray(domain.dist_boundary(x))
        rad = R_loc * d
        rho = rad * np.sqrt(uu[:, 2])
        th = 2.0 * math.pi * uu[:, 3]
        y = x + np.column_stack([rho * np.cos(th), rho * np.sin(th)])
        ins_y = np.asarray(domain.inside(y))
        keep = ins_x & ins_y & (d > 0)
        pd = phi_ev(np.where(d > 0, d, 1.0))
        if np.any(np.asarray(pd) <= 0):
            raise ValueError("phi must be positive on sampled arguments")
        w = np.where(
            keep,
            A * math.pi * rad**2 * np.abs(u(x) - u(y)) ** p / (pd * np.where(d > 0, d, 1.0) ** 2),
            0.0,
        )
        tot += float(w.sum())
        totsq += float((w * w).sum())
        done += m
    mean = tot / n
    var = max(totsq / n - mean * mean, 0.0)
    return MeasuredValue(mean, math.sqrt(var / n), n)
