"""Weak scaling conditions and the psi extension.

A pass from these checks certifies the inequality phi(s t) >= H t^eta phi(s)
only on the evaluation grid (about 10^6 points), not on the continuum; the
report records the worst margin and where it occurred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

S_GRID = np.geomspace(1e-4, 1e4, 1000)
T_GRID_LOWER = np.geomspace(1.0, 1e4, 1000)
T_GRID_UPPER = np.geomspace(1e-4, 1.0, 1000)
_POSITIVITY_GRID = np.geomspace(1e-6, 1e6, 1000)
_MARGIN_TOL = 1e-12


@dataclass
class ScalingFunction:
    evaluator: Callable
    kind: str  # "power" | "tabulated" | "extended"
    label: str
    claimed_eta: float | None = None
    claimed_H: float | None = None
    breakpoint: float | None = None
    eta0: float | None = None

    def __post_init__(self):
        if self.kind not in ("power", "tabulated", "extended"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.claimed_H is not None and not (0.0 < self.claimed_H <= 1.0):
            raise ValueError("H must lie in (0, 1]")
        vals = self.evaluate(_POSITIVITY_GRID)
        if not (np.isfinite(vals).all() and (vals > 0).all()):
            raise ValueError(f"{self.label}: not positive/finite on the check grid")

    def evaluate(self, t) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(t, dtype=float)), dtype=float)

    def __call__(self, t):
        return self.evaluate(t)


def power_scaling(a: float, coeff: float = 1.0, claimed_eta: float | None = None,
                  claimed_H: float | None = None) -> ScalingFunction:
    if coeff <= 0:
        raise ValueError("coefficient must be positive")
    return ScalingFunction(lambda t: coeff * t**a, "power", f"{coeff:g}*t^{a:g}",
                           claimed_eta=claimed_eta, claimed_H=claimed_H)


def tabulated_scaling(breaks, values, claimed_eta: float | None = None,
                      claimed_H: float | None = None, label: str = "tabulated") -> ScalingFunction:
    """Piecewise power function through (breaks, values), i.e. linear in
    log-log coordinates; the edge segments extrapolate to all of (0, inf)."""
    b = np.asarray(breaks, dtype=float)
    v = np.asarray(values, dtype=float)
    if b.ndim != 1 or b.shape != v.shape or len(b) < 2:
        raise ValueError("need matching 1-d breaks/values with at least 2 points")
    if not (np.diff(b) > 0).all() or b[0] <= 0:
        raise ValueError("breaks must be positive and strictly increasing")
    if not (v > 0).all():
        raise ValueError("values must be positive")
    lb, lv = np.log(b), np.log(v)
    slope_lo = (lv[1] - lv[0]) / (lb[1] - lb[0])
    slope_hi = (lv[-1] - lv[-2]) / (lb[-1] - lb[-2])

    def ev(t):
        lt = np.log(t)
        out = np.interp(lt, lb, lv)
        out = np.where(lt < lb[0], lv[0] + slope_lo * (lt - lb[0]), out)
        out = np.where(lt > lb[-1], lv[-1] + slope_hi * (lt - lb[-1]), out)
        return np.exp(out)

    return ScalingFunction(ev, "tabulated", label, claimed_eta=claimed_eta, claimed_H=claimed_H)


def _scaling_report(phi: ScalingFunction, eta: float, H: float, t_grid: np.ndarray) -> dict:
    if not (0.0 < H <= 1.0):
        raise ValueError("H must lie in (0, 1]")
    s = S_GRID[:, None]
    t = t_grid[None, :]
    lhs = phi.evaluate(s * t)
    rhs = H * t**eta * phi.evaluate(S_GRID)[:, None]
    margin = lhs / rhs - 1.0
    k = int(np.argmin(margin))
    i, j = divmod(k, len(t_grid))
    worst = float(margin[i, j])
    return {
        "phi": phi.label,
        "eta": eta,
        "H": H,
        "pass": bool(worst >= -_MARGIN_TOL),
        "worst_margin": worst,
        "witness_s": float(S_GRID[i]),
        "witness_t": float(t_grid[j]),
        "grid_points": int(margin.size),
        "note": "inequality certified on the grid only",
    }


def wlsc_check(phi: ScalingFunction, eta: float, H: float, cfg=None) -> dict:
    """phi(st) >= H t^eta phi(s) for t >= 1 (grid s in [1e-4,1e4], t in [1,1e4])."""
    return _scaling_report(phi, eta, H, T_GRID_LOWER)


def wusc_check(phi: ScalingFunction, eta: float, H: float, cfg=None) -> dict:
    """Same inequality for t in (0, 1] (grid t in [1e-4, 1])."""
    return _scaling_report(phi, eta, H, T_GRID_UPPER)


def select_eta0(eta: float, dimA_boundary: float, d: float) -> float:
    """eta itself when positive; otherwise the midpoint of (0, d - dimA),
    which keeps eta0 + dimA - d < 0 with room on both sides."""
    if dimA_boundary >= d:
        raise ValueError(f"dimA_boundary={dimA_boundary} must be below the ambient dimension {d}")
    if eta > 0.0:
        return eta
    eta0 = (d - dimA_boundary) / 2.0
    assert eta0 + dimA_boundary - d < 0.0
    return eta0


def psi_extend(phi: ScalingFunction, M: float, eta0: float) -> ScalingFunction:
    """psi = phi on (0, M], power continuation phi(M) (x/M)^{eta0} beyond."""
    if M <= 0:
        raise ValueError("M must be positive")
    if eta0 <= 0:
        raise ValueError("eta0 must be positive")
    phiM = float(phi.evaluate(M))
    if phiM <= 0:
        raise ValueError("phi(M) must be positive")

    def ev(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= M, phi.evaluate(np.minimum(t, M)), phiM * (t / M) ** eta0)

    return ScalingFunction(ev, "extended", f"psi[{phi.label},M={M:g},eta0={eta0:g}]",
                           claimed_eta=eta0, claimed_H=phi.claimed_H,
                           breakpoint=M, eta0=eta0)


def psi_lower_asymptotic_check(psi: ScalingFunction, M: float, R_loc: float,
                               eta0: float, H: float, cfg=None) -> dict:
    """Best constant in psi(z) >= c z^{eta0} for z >= M/R_loc, over a log grid.

    Beyond the breakpoint the ratio is constant by construction, so the
    grid spans [M/R_loc, 1e4*M]."""
    if M <= 0 or R_loc <= 0:
        raise ValueError("M and R_loc must be positive")
    z = np.geomspace(M / R_loc, 1e4 * M, 1000)
    ratio = psi.evaluate(z) / z**eta0
    k = int(np.argmin(ratio))
    c = float(ratio[k])
    return {
        "psi": psi.label,
        "M": M,
        "R_loc": R_loc,
        "eta0": eta0,
        "H": H,
        "c_estimate": c,
        "witness_z": float(z[k]),
        "pass": bool(c > 0.0),
    }
