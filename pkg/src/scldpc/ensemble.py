"""Regular and coupled ensemble parameters, design rates and scalar thresholds."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._numeric import BracketError, bisect, ipow

ROOT_TOL = 1e-12


@dataclass(frozen=True)
class RegularEnsemble:
    """(l, r)-regular LDPC ensemble with variable degree l and check degree r."""

    l: int
    r: int

    def __post_init__(self):
        if not (isinstance(self.l, int) and isinstance(self.r, int)):
            raise TypeError("degrees must be integers")
        if self.l < 3:
            raise ValueError(f"variable degree must be at least 3, got {self.l}")
        if self.r < self.l:
            raise ValueError(f"check degree {self.r} is below variable degree {self.l}")

    @property
    def rate(self) -> Fraction:
        return Fraction(self.r - self.l, self.r)

    # scalar DE and its derivatives
    def g(self, x):
        """(1 - (1 - x)^(r-1))^(l-1)."""
        return ipow(1.0 - ipow(1.0 - x, self.r - 1), self.l - 1)

    def eps_of_x(self, x):
        """Channel parameter for which x is a scalar DE fixed point."""
        return x / self.g(x)

    def h(self, x, eps: float):
        return eps * self.g(x) - x

    def dh(self, x, eps: float):
        l, r = self.l, self.r
        y = 1.0 - ipow(1.0 - x, r - 1)
        return eps * (l - 1) * (r - 1) * ipow(y, l - 2) * ipow(1.0 - x, r - 2) - 1.0

    def p_bp(self, x):
        l, r = self.l, self.r
        val = ((l - 1) * (r - 1) - 1) * ipow(1.0 - x, r - 2)
        for i in range(r - 2):
            val = val - ipow(1.0 - x, i)
        return val

    def p_map(self, x):
        l, r = self.l, self.r
        return x + ipow(1.0 - x, r - 1) * (l + l * (r - 1) * x - r * x) / r - l / r

    def h_inflection(self) -> float:
        """Unique zero of h'' on (0, 1)."""
        l, r = self.l, self.r
        return 1.0 - ((r - 2) / (l * r - l - r)) ** (1.0 / (r - 1))

    def x_bp_lower_bound(self) -> float:
        return 1.0 - (self.l - 1) ** (-1.0 / (self.r - 2))


@dataclass(frozen=True)
class ChainParams:
    """(l, r=kl, L) chain: 2L+1 positions, each variable spreads over 2*lhat+1 checks."""

    base: RegularEnsemble
    L: int

    def __post_init__(self):
        if self.base.l % 2 == 0:
            raise ValueError("chain ensemble needs an odd variable degree")
        if self.base.r % self.base.l or self.base.r // self.base.l < 2:
            raise ValueError("chain ensemble needs r = k*l with k >= 2")
        if self.L < 1:
            raise ValueError("L must be at least 1")

    @property
    def lhat(self) -> int:
        return (self.base.l - 1) // 2

    @property
    def k(self) -> int:
        return self.base.r // self.base.l


@dataclass(frozen=True)
class SmoothedParams:
    """(l, r, L, w) ensemble with smoothing window w."""

    base: RegularEnsemble
    L: int
    w: int

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.w < 1:
            raise ValueError("w must be at least 1")


@dataclass(frozen=True)
class ThresholdReport:
    eps_bp: float
    eps_map: float
    x_bp: float
    x_map: float
    tol: float


@dataclass(frozen=True)
class HLandscape:
    eps: float
    x_u: float
    x_s: float
    x_star: float
    x_upstar: float
    kappa_star: float
    lambda_star: float
    kappa_upstar: float
    lambda_upstar: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def design_rate_regular(e: RegularEnsemble) -> Fraction:
    return e.rate


def design_rate_chain(p: ChainParams) -> Fraction:
    k, L = p.k, p.L
    return Fraction(k - 1, k) - Fraction(2 * p.lhat, k * (2 * L + 1))


def design_rate_smoothed(p: SmoothedParams) -> Fraction:
    l, r, L, w = p.base.l, p.base.r, p.L, p.w
    if w > 2 * L:
        raise ValueError(f"design rate formula needs w <= 2L, got w={w}, L={L}")
    tail = sum(Fraction(i, w) ** r for i in range(w + 1))
    return Fraction(r - l, r) - Fraction(l, r) * (w + 1 - 2 * tail) / (2 * L + 1)


def thresholds_regular(e: RegularEnsemble, tol: float = ROOT_TOL) -> ThresholdReport:
    """BP and MAP thresholds from the roots of p_bp and p_map."""
    try:
        x_bp = bisect(e.p_bp, tol, 1.0 - tol, tol)
    except BracketError as exc:
        raise RuntimeError(f"p_bp has no sign change for {e}") from exc
    if x_bp < e.x_bp_lower_bound():
        raise AssertionError(f"x_bp={x_bp} below its analytic lower bound")
    # p_map vanishes at 0 and is negative just above it; the nontrivial root lies above x_bp
    try:
        x_map = bisect(e.p_map, x_bp, 1.0 - tol, tol)
    except BracketError as exc:
        raise RuntimeError(f"p_map has no sign change for {e}") from exc
    return ThresholdReport(float(e.eps_of_x(x_bp)), float(e.eps_of_x(x_map)), x_bp, x_map, tol)


def map_threshold_asymptotic(rate: float, l: int) -> tuple[float, float]:
    """Leading-order large-degree approximation of (x_map, eps_map) at a given design rate."""
    if not 0 < rate < 1:
        raise ValueError("rate must lie in (0, 1)")
    r = rate
    e1 = l / (1 - r) - 1
    x = (1 - r) * (1 - r ** e1 * (l + r - 1) / (1 - r ** (e1 - 1) * (1 + l * (l + r - 2))))
    eps = x * (1 + (1 - r - x) / ((l + r - 1) * x)) ** (l - 1)
    return x, eps


def _stationary_points(e: RegularEnsemble, eps: float, tol: float) -> tuple[float, float]:
    xi = e.h_inflection()
    x_star = bisect(lambda x: e.dh(x, eps), tol, xi, tol)
    x_upstar = bisect(lambda x: e.dh(x, eps), xi, 1.0, tol)
    return x_star, x_upstar


def h_landscape(eps: float, e: RegularEnsemble, tol: float = ROOT_TOL,
                eps_bp: float | None = None) -> HLandscape:
    """Roots, stationary points and tangent-slope constants of h at eps."""
    if eps_bp is None:
        eps_bp = thresholds_regular(e, tol).eps_bp
    if not eps_bp < eps <= 1.0:
        raise ValueError(f"no nontrivial fixed points: eps={eps} outside (eps_bp={eps_bp}, 1]")
    x_star, x_upstar = _stationary_points(e, eps, tol)
    h = lambda x: e.h(x, eps)
    if h(x_upstar) <= 0.0:
        raise ValueError(f"no nontrivial fixed points at eps={eps} (numerically at threshold)")
    x_u = bisect(h, x_star, x_upstar, tol)
    x_s = 1.0 if eps == 1.0 else bisect(h, x_upstar, 1.0, tol)
    h_lo, h_hi = h(x_star), h(x_upstar)
    du, ds = e.dh(x_u, eps), e.dh(x_s, eps)
    return HLandscape(
        eps=eps, x_u=x_u, x_s=x_s, x_star=x_star, x_upstar=x_upstar,
        kappa_star=min(1.0, -h_lo / x_star),
        lambda_star=min(du, -h_lo / (x_u - x_star)),
        kappa_upstar=min(du, h_hi / (x_upstar - x_u)),
        lambda_upstar=min(-ds, h_hi / (x_s - x_upstar)),
    )


def x_u_at_one(e: RegularEnsemble) -> float:
    """Unstable fixed point of scalar DE at eps = 1."""
    return h_landscape(1.0, e).x_u


def stable_fp(e: RegularEnsemble, eps: float, tol: float = ROOT_TOL) -> float:
    """x_s(eps), or 0 when eps is below the BP threshold."""
    if eps >= 1.0:
        return 1.0
    eps_bp = thresholds_regular(e, tol).eps_bp
    if eps <= eps_bp:
        return 0.0
    xi = e.h_inflection()
    x_upstar = bisect(lambda x: e.dh(x, eps), xi, 1.0, tol)
    return bisect(lambda x: e.h(x, eps), x_upstar, 1.0, tol)


def sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


__all__ = [
    "RegularEnsemble", "ChainParams", "SmoothedParams", "ThresholdReport", "HLandscape",
    "design_rate_regular", "design_rate_chain", "design_rate_smoothed",
    "thresholds_regular", "map_threshold_asymptotic", "h_landscape", "x_u_at_one",
    "stable_fp", "sign_changes",
]
