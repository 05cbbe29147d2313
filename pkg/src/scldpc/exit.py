"""EBP EXIT curves, the area-theorem MAP threshold and wiggle measurement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numeric import adaptive_simpson, bisect, ipow
from .de import Constellation, DEConfig, SmoothedSystem, make_system
from .ensemble import ROOT_TOL, RegularEnsemble, stable_fp, thresholds_regular


class UncoupledSystem(SmoothedSystem):
    """A single uncoupled section of the (l, r) ensemble."""

    def __init__(self, e: RegularEnsemble):
        self.params = e
        self.one_sided = False
        self.l, self.r, self.w = e.l, e.r, 1
        self.n = 1
        self.shape = (1,)


def system_for(params):
    if isinstance(params, RegularEnsemble):
        return UncoupledSystem(params)
    return make_system(params)


def base_ensemble(params) -> RegularEnsemble:
    system = system_for(params)
    p = system.params
    return p if isinstance(p, RegularEnsemble) else p.base


@dataclass(frozen=True)
class ExitPoint:
    chi: float
    eps: float
    h_ebp: float
    converged: bool = True
    iterations: int = 0
    x_max: float = float("nan")
    x_edge: float = float("nan")


@dataclass(frozen=True)
class ExitCurve:
    points: tuple[ExitPoint, ...]
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        chis = [p.chi for p in self.points]
        if any(b <= a for a, b in zip(chis, chis[1:])):
            raise ValueError("chi must be strictly increasing along the curve")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


@dataclass(frozen=True)
class WiggleReport:
    eps_min: float
    eps_max: float
    amplitude: float
    chi_band: tuple[float, float]
    n_points: int
    wiggle_count: int


def ebp_regular(x, e: RegularEnsemble) -> tuple:
    """Parametric EBP curve (eps(x), (1 - (1 - x)^(r-1))^l)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x > 1):
        raise ValueError("x must lie in (0, 1]")
    y = 1.0 - ipow(1.0 - x, e.r - 1)
    eps, h = x / ipow(y, e.l - 1), ipow(y, e.l)
    if eps.ndim == 0:
        return float(eps), float(h)
    return eps, h


def ebp_fixed_entropy_step(c: Constellation, params, chi: float) -> tuple[Constellation, float]:
    """One DE step with eps chosen so that the new entropy equals chi."""
    if not 0 < chi < 1:
        raise ValueError("chi must lie in (0, 1)")
    system = system_for(params)
    G = system.g(c.values)
    mean_g = float(np.mean(system.sections(G)))
    if mean_g <= 0.0:
        raise ValueError(f"entropy {chi} is unreachable from a constellation with g = 0")
    eps = chi / mean_g
    return Constellation(eps * G, c.one_sided, c.iterations + 1), eps


def _exit_point(system, X, chi, eps, converged, it) -> ExitPoint:
    sec = system.sections(X)
    h = float(np.mean(system.exit_values(X)))
    return ExitPoint(chi, eps, h, converged, it, float(np.max(sec)), float(max(sec[0], sec[-1])))


def ebp_curve(params, chi_grid, cfg: DEConfig | None = None, max_iter: int = 200_000,
              warm_start: bool = True) -> ExitCurve:
    """Trace the EBP curve by fixed-entropy DE, warm-starting each chi from the previous one."""
    cfg = cfg or DEConfig()
    system = system_for(params)
    chis = np.asarray(chi_grid, dtype=float)
    if chis.ndim != 1 or chis.size == 0 or np.any(np.diff(chis) <= 0):
        raise ValueError("chi grid must be a non-empty ascending sequence")
    if chis[0] <= 0 or chis[-1] >= 1:
        raise ValueError("chi grid must lie in (0, 1)")
    limit = min(max_iter, cfg.max_iter)
    points = []
    X = system.full(chis[0])
    for chi in chis:
        start_mean = float(np.mean(system.sections(X)))
        X = X * (chi / start_mean) if warm_start and start_mean > 0 else system.full(chi)
        eps, converged, it = float("nan"), False, 0
        for it in range(1, limit + 1):
            G = system.g(X)
            eps = chi / float(np.mean(system.sections(G)))
            new = eps * G
            change = float(np.max(np.abs(new - X)))
            X = new
            if change < cfg.tol:
                converged = True
                break
        points.append(_exit_point(system, X, float(chi), eps, converged, it))
    return ExitCurve(tuple(points), _descriptor(params))


def _descriptor(params) -> dict:
    system = system_for(params)
    p = system.params
    if isinstance(p, RegularEnsemble):
        return {"variant": "uncoupled", "l": p.l, "r": p.r}
    d = {"variant": system.variant, "l": p.base.l, "r": p.base.r, "L": p.L}
    if isinstance(system, SmoothedSystem):
        d["w"] = p.w
    return d


def area_under_bp_exit(e: RegularEnsemble, eps: float, quad_tol: float = 1e-12) -> float:
    """Integral of the BP EXIT function from eps to 1, taken over x on the stable branch."""
    l, r = e.l, e.r
    x0 = stable_fp(e, eps)
    if x0 <= 0.0:
        raise ValueError("eps must exceed the BP threshold")

    # h(x) * d eps/dx for eps(x) = x / y^(l-1), h = y^l
    def integrand(x):
        y = 1.0 - ipow(1.0 - x, r - 1)
        return y - x * (l - 1) * (r - 1) * ipow(1.0 - x, r - 2)

    return adaptive_simpson(integrand, x0, 1.0, quad_tol)


def map_threshold_via_area(e: RegularEnsemble, quad_tol: float = 1e-12,
                           tol: float = ROOT_TOL) -> float:
    """eps at which the area under the BP EXIT curve to the right equals the design rate."""
    eps_bp = thresholds_regular(e).eps_bp
    rate = float(e.rate)
    return bisect(lambda u: area_under_bp_exit(e, u, quad_tol) - rate,
                  eps_bp + 1e-9, 1.0 - 1e-12, tol)


def steep_branch(curve: ExitCurve, e: RegularEnsemble, delta: float = 1e-4) -> tuple[float, float]:
    """chi range of points whose constellation has a plateau at x_s(eps) and near-zero ends."""
    eps_bp = thresholds_regular(e).eps_bp
    keep = []
    for p in curve.points:
        if not p.converged or not eps_bp < p.eps < 1:
            continue
        if abs(p.x_max - stable_fp(e, p.eps)) <= delta and p.x_edge <= delta:
            keep.append(p.chi)
    if not keep:
        raise ValueError("curve has no steep-branch points")
    return min(keep), max(keep)


def wiggle_report(curve: ExitCurve, chi_band: tuple[float, float] | None = None,
                  e: RegularEnsemble | None = None, delta: float = 1e-4) -> WiggleReport:
    """eps spread over the points with chi in chi_band (default: the detected steep branch)."""
    if chi_band is None:
        if e is None:
            raise ValueError("need the base ensemble to locate the steep branch")
        chi_band = steep_branch(curve, e, delta)
    lo, hi = chi_band
    eps = np.array([p.eps for p in curve.points if lo <= p.chi <= hi and p.converged])
    if eps.size == 0:
        raise ValueError(f"no converged points with chi in [{lo}, {hi}]")
    d = np.sign(np.diff(eps))
    d = d[d != 0]
    count = int(np.count_nonzero(d[1:] != d[:-1]))
    return WiggleReport(float(eps.min()), float(eps.max()), float(eps.max() - eps.min()),
                        (float(lo), float(hi)), int(eps.size), count)


__all__ = [
    "UncoupledSystem", "ExitPoint", "ExitCurve", "WiggleReport", "ebp_regular",
    "ebp_fixed_entropy_step", "ebp_curve", "area_under_bp_exit", "map_threshold_via_area",
    "steep_branch", "wiggle_report", "system_for", "base_ensemble",
]
