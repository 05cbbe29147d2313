"""Growth exponent of the stopping-set weight distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._numeric import BracketError, bisect, h2
from .ensemble import RegularEnsemble

LOG_DOMAIN_ABOVE = 40


@dataclass(frozen=True)
class SSExponentReport:
    x_hat: float
    omega_hat: float
    l_omega_hat: float
    b_at_root: float


def _log_p_and_a(r: int, x: float) -> tuple[float, float]:
    """log p(x) and a(x) for p(x) = sum_{i != 1} C(r, i) x^i."""
    idx = [i for i in range(r + 1) if i != 1]
    if r <= LOG_DOMAIN_ABOVE and 1e-150 < x < 1e150 / r:
        terms = [math.comb(r, i) * x ** i for i in idx]
        p = math.fsum(terms)
        return math.log(p), math.fsum(i * t for i, t in zip(idx, terms)) / p
    logs = np.array([math.lgamma(r + 1) - math.lgamma(i + 1) - math.lgamma(r - i + 1)
                     + i * math.log(x) for i in idx])
    top = logs.max()
    wts = np.exp(logs - top)
    total = math.fsum(wts)
    return top + math.log(total), math.fsum(np.array(idx) * wts) / total


def ss_generating_functions(e: RegularEnsemble, x: float) -> tuple[float, float, float, float]:
    """(p(x), a(x), b(x), omega(x)); p is returned as +inf when it overflows."""
    if not x > 0:
        raise ValueError("x must be positive")
    l, r = e.l, e.r
    logp, a = _log_p_and_a(r, x)
    omega = a / r
    b = -(l - 1) * h2(omega) + (l / r) * logp / math.log(2) - a * (l / r) * math.log2(x)
    p = math.exp(logp) if logp < 700 else math.inf
    return p, a, float(b), omega


def _b(e: RegularEnsemble, x: float) -> float:
    return ss_generating_functions(e, x)[2]


def ss_exponent(e: RegularEnsemble, tol: float = 1e-14, lo: float = 1e-12, hi: float = 10.0,
                scan_points: int = 2000) -> SSExponentReport:
    """Positive root of b, located by a log-spaced sign scan and refined by bisection."""
    grid = np.logspace(math.log10(lo), math.log10(hi), scan_points)
    vals = np.array([_b(e, float(x)) for x in grid])
    cross = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if cross.size == 0:
        raise BracketError(f"b(x) has no sign change on [{lo}, {hi}] for {e}")
    k = int(cross[0])
    x_hat = bisect(lambda x: _b(e, x), float(grid[k]), float(grid[k + 1]), tol)
    _, _, b, omega = ss_generating_functions(e, x_hat)
    return SSExponentReport(x_hat, omega, e.l * omega, b)


@dataclass(frozen=True)
class GrowthPoint:
    omega: float
    exponent: float
    x: float
    ok: bool


def ss_growth_curve(e: RegularEnsemble, omega_grid, x_lo: float = 1e-12,
                    x_hi: float = 1e12) -> list[GrowthPoint]:
    """Exponent b as a function of relative weight omega, via the parametric map x -> omega(x)."""
    w_lo = ss_generating_functions(e, x_lo)[3]
    w_hi = ss_generating_functions(e, x_hi)[3]
    out = []
    for omega in omega_grid:
        omega = float(omega)
        if not w_lo < omega < w_hi:
            out.append(GrowthPoint(omega, math.nan, math.nan, False))
            continue
        # omega(x) increases in x; bisect on log x
        t = bisect(lambda s: ss_generating_functions(e, math.exp(s))[3] - omega,
                   math.log(x_lo), math.log(x_hi), 1e-13)
        x = math.exp(t)
        out.append(GrowthPoint(omega, _b(e, x), x, True))
    return out
