"""One-sided fixed points, the interpolated EXIT family and its diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._numeric import ConvergenceError
from .de import (Constellation, DEConfig, SmoothedSystem, forward_de, make_system,
                 one_sided_forward_de)
from .ensemble import RegularEnsemble, SmoothedParams, h_landscape, stable_fp, thresholds_regular


@dataclass(frozen=True)
class OneSidedFP:
    eps_star: float
    x: Constellation
    chi: float
    outcome: str  # "proper-at-chi" or "eps-one-case"
    l: int
    r: int
    w: int
    iterations: int = 0
    eps_spread: float = 0.0
    residual: float = 0.0
    length_bound: float = 0.0

    @property
    def values(self) -> np.ndarray:
        return self.x.values

    @property
    def Lp(self) -> int:
        return self.x.L

    @property
    def ensemble(self) -> RegularEnsemble:
        return RegularEnsemble(self.l, self.r)


@dataclass(frozen=True)
class AreaReport:
    A: float
    bound: float
    design_rate: float
    residual: float
    refinement_change: float

    @property
    def within_bound(self) -> bool:
        return self.residual <= self.bound


def length_bound(l: int, r: int, w: int, chi: float) -> float:
    """Chain length above which a proper one-sided FP of entropy chi is guaranteed to exist."""
    e = RegularEnsemble(l, r)
    land = h_landscape(1.0, e)
    gap = chi - land.x_u
    if gap <= 0:
        raise ValueError(f"chi={chi} must exceed x_u(1)={land.x_u}")
    rate = 1 - l / r
    return max(4 * l * w / (r * rate * gap),
               8 * w / (land.kappa_upstar * gap ** 2),
               8 * w / (land.lambda_upstar * gap * rate),
               w / (r / l - 1))


def _invariant_violation(x, chi, z, tol=1e-12) -> str | None:
    if abs(float(np.mean(x)) - chi) > tol:
        return f"entropy {np.mean(x)} differs from {chi}"
    if np.any(np.diff(x) < -tol):
        return "constellation is not non-decreasing"
    if np.any(x > z + tol):
        return "constellation exceeds the eps=1 fixed point"
    return None


def construct_one_sided_fp(l: int, r: int, w: int, Lp: int, chi: float,
                           cfg: DEConfig | None = None, *, strict: bool = False,
                           step_tol: float = 1e-11, patience: int = 50,
                           max_iter: int = 1_000_000, check_invariants: bool = False) -> OneSidedFP:
    """Proper one-sided FP of entropy chi by iterating the entropy-preserving map V.

    With ``strict`` the chain length must meet ``length_bound``; otherwise the
    bound is only recorded.
    """
    cfg = cfg or DEConfig()
    e = RegularEnsemble(l, r)
    params = SmoothedParams(e, Lp, w)
    system = make_system(params, one_sided=True)
    land = h_landscape(1.0, e)
    if chi <= land.x_u:
        raise ValueError(f"chi={chi} must exceed x_u(1)={land.x_u}")
    bound = length_bound(l, r, w, chi)
    if strict and Lp < bound:
        raise ValueError(f"Lp={Lp} is below the length bound {bound:.1f}")

    z = one_sided_forward_de(params, 1.0, cfg).values.copy()
    chi_z = float(np.mean(z))
    if chi >= chi_z:
        raise ValueError(f"chi={chi} must be below the entropy {chi_z} of the eps=1 fixed point")

    def V(x):
        U = system.g(x)
        chi_u = float(np.mean(U))
        if chi <= chi_u:
            return U * (chi / chi_u)
        a = (chi_z - chi) / (chi_z - chi_u)
        return a * U + (1 - a) * z

    x = z * (chi / chi_z)
    quiet = 0
    for it in range(1, max_iter + 1):
        new = V(x)
        change = float(np.max(np.abs(new - x)))
        x = new
        if check_invariants:
            bad = _invariant_violation(x, chi, z)
            if bad:
                raise AssertionError(f"iteration {it}: {bad}")
        quiet = quiet + 1 if change < step_tol else 0
        if quiet >= patience:
            break
    else:
        raise ConvergenceError(f"V-iteration did not settle in {max_iter} steps",
                               last=Constellation(x, True), iterations=max_iter)

    U = system.g(x)
    if chi <= float(np.mean(U)):
        ratios = _interior_ratios(x, U, w)
        eps_star = float(np.median(ratios))
        spread = float(np.max(np.abs(ratios - eps_star)))
        residual = float(np.max(np.abs(eps_star * U - x)))
        return OneSidedFP(eps_star, Constellation(x, True, it), chi, "proper-at-chi", l, r, w,
                          it, spread, residual, bound)

    # U(x) dominates nowhere: descend from x to the eps=1 fixed point below it
    for k in range(1, cfg.max_iter + 1):
        new = system.g(x)
        change = float(np.max(np.abs(new - x)))
        x = new
        if change < cfg.tol:
            break
    residual = float(np.max(np.abs(system.g(x) - x)))
    return OneSidedFP(1.0, Constellation(x, True, it + k), float(np.mean(x)), "eps-one-case",
                      l, r, w, it + k, 0.0, residual, bound)


def _interior_ratios(x, U, w):
    idx = np.arange(len(x))
    mask = (idx >= w - 1) & (U > 1e-12)
    if not np.any(mask):
        mask = U > 0
    return x[mask] / U[mask]


def one_sided_residual(fp: OneSidedFP) -> float:
    system = make_system(SmoothedParams(fp.ensemble, fp.Lp, fp.w), one_sided=True)
    return float(np.max(np.abs(fp.eps_star * system.g(fp.values) - fp.values)))


class InterpolatedFamily:
    """Four-phase family of symmetric constellations on [-L, L] built from a one-sided FP."""

    def __init__(self, fp: OneSidedFP, L: int):
        if not 1 <= L < fp.Lp:
            raise ValueError(f"need 1 <= L < L'={fp.Lp}, got L={L}")
        if fp.outcome != "proper-at-chi":
            raise ValueError("the family needs a proper fixed point at the target entropy")
        self.fp = fp
        self.L, self.Lp, self.w = L, fp.Lp, fp.w
        self.l, self.r = fp.l, fp.r
        self.xstar = np.asarray(fp.values, dtype=float)
        self.system = SmoothedSystem(SmoothedParams(fp.ensemble, L, fp.w))

    def xs(self, j):
        """x*_j for integer index j <= 0 (zero left of -L')."""
        j = np.asarray(j)
        out = np.zeros(j.shape)
        ok = j >= -self.Lp
        out[ok] = self.xstar[j[ok] + self.Lp]
        return out

    def half(self, alpha: float) -> np.ndarray:
        """x_i(alpha) for i in [-L, 0]."""
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        i = np.arange(-self.L, 1)
        x0 = self.xstar[-1]
        if alpha >= 0.75:
            return np.full(i.shape, (4 * alpha - 3) + (4 - 4 * alpha) * x0)
        if alpha >= 0.5:
            return (4 * alpha - 2) * x0 - (4 * alpha - 3) * self.xs(i)
        if alpha > 0.25:
            s = 4 * (0.5 - alpha) * (self.Lp - self.L)
            c = math.ceil(s)
            frac = s - c + 1  # s mod 1, taken in (0, 1]
            lo, hi = self.xs(i - c), self.xs(i - c + 1)
            return _pow0(lo, frac) * _pow0(hi, 1 - frac)
        return 4 * alpha * self.xs(i - self.Lp + self.L)

    def x(self, alpha: float) -> np.ndarray:
        h = self.half(alpha)
        return np.concatenate([h, h[-2::-1]])

    def evaluate(self, alpha: float) -> tuple[Constellation, np.ndarray]:
        x = self.x(alpha)
        g = self.system.g(x)
        eps = np.zeros_like(x)
        pos = x > 0
        with np.errstate(divide="ignore"):
            eps[pos] = np.where(g[pos] > 0, x[pos] / np.where(g[pos] > 0, g[pos], 1.0), np.inf)
        return Constellation(x), eps

    def exit_values(self, alpha: float) -> np.ndarray:
        return self.system.exit_values(self.x(alpha))

    def seams(self) -> np.ndarray:
        """alpha values where the family changes formula."""
        k = np.arange(self.Lp - self.L + 1)
        return np.unique(np.concatenate([[0, 0.25, 0.5, 0.75, 1],
                                         0.5 - k / (4 * (self.Lp - self.L))]))

    def default_grid(self, per_piece: int = 64) -> np.ndarray:
        s = self.seams()
        pieces = [np.linspace(a, b, per_piece, endpoint=False) for a, b in zip(s[:-1], s[1:])]
        return np.concatenate(pieces + [[1.0]])


def _pow0(base, p):
    """base**p with 0**0 = 1."""
    if p == 0:
        return np.ones_like(base)
    return np.power(base, p)


def interpolate(family: InterpolatedFamily, alpha: float) -> tuple[Constellation, np.ndarray]:
    return family.evaluate(alpha)


def _parts_area(family: InterpolatedFamily, grid: np.ndarray) -> float:
    l = family.l
    X = np.array([family.x(float(a)) for a in grid])
    # with u = g^(1/(l-1)): h*eps = x*u and eps dh = l*x du, both finite where g underflows
    Uq = np.power(np.array([family.system.g(x) for x in X]), 1.0 / (l - 1))
    boundary = X[-1] * Uq[-1] - X[0] * Uq[0]
    integral = l * np.sum(0.5 * (X[1:] + X[:-1]) * np.diff(Uq, axis=0), axis=0)
    return float(np.mean(boundary - integral))


def family_area(family: InterpolatedFamily, alpha_grid=None, refine_tol: float = 1e-4,
                max_refinements: int = 4) -> AreaReport:
    """EXIT-integral area of the family, computed per section in the parts form.

    The alpha grid is halved until two successive areas agree to ``refine_tol``.
    """
    grid = family.default_grid() if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("alpha grid must increase from 0 to 1")
    A = _parts_area(family, grid)
    for _ in range(max_refinements):
        grid = np.sort(np.concatenate([grid, 0.5 * (grid[1:] + grid[:-1])]))
        A2 = _parts_area(family, grid)
        change = abs(A2 - A)
        if change < refine_tol:
            break
        A = A2
    else:
        raise ConvergenceError(f"area changed by {change:.2e} under refinement")
    l, r, w, L = family.l, family.r, family.w, family.L
    rate = 1 - l / r
    return AreaReport(A2, w * l * r / L, rate, abs(A2 - rate), change)


def gamma_phase3(fp: OneSidedFP) -> float:
    l, r, w = fp.l, fp.r, fp.w
    return ((r - 1) * (l - 1) * fp.eps_star ** (1 / (l - 1)) * (1 + w ** 0.125) / w) ** (l - 1)


@dataclass(frozen=True)
class PhaseReport:
    phase1_ok: bool
    phase2_ok: bool
    phase3_ok: bool
    phase3_points: int  # sections with x_i > gamma that the phase (iii) bounds applied to
    max_step: float  # largest sup-norm change between neighbouring grid points


def phase_bounds(family: InterpolatedFamily, alpha_grid=None, slack: float = 1e-9) -> PhaseReport:
    """Check the local channel parameters of each phase against their bounds on a grid."""
    fp, L, w = family.fp, family.L, family.w
    grid = family.default_grid() if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    e = fp.ensemble
    i = np.arange(-L, 1)
    x0, xmL = family.xstar[-1], float(family.xs(np.array([-L]))[0])
    floor2 = float(e.eps_of_x(x0)) * xmL / x0
    gamma = gamma_phase3(fp)
    hi3, lo3 = fp.eps_star * (1 + w ** -0.125), fp.eps_star * (1 - 1 / (1 + w ** 0.125))
    ok1 = ok2 = ok3 = True
    points, max_step, prev = 0, 0.0, None
    for a in grid:
        c, eps = family.evaluate(float(a))
        x, eps = c.values[: L + 1], eps[: L + 1]
        if prev is not None:
            max_step = max(max_step, float(np.max(np.abs(c.values - prev))))
        prev = c.values
        if a >= 0.75:
            inner = i >= -L + w - 1
            ok1 &= bool(np.all(np.abs(eps[inner] - eps[-1]) <= slack * eps[-1])
                        and np.all(eps >= eps[-1] * (1 - slack)))
        if 0.5 <= a <= 0.75:
            ok2 &= bool(np.all(eps >= floor2 - slack))
        if 0.25 <= a <= 0.5:
            big = x > gamma
            points += int(np.count_nonzero(big))
            upper = big & (i >= -L + w - 1) & (i <= -w + 1)
            ok3 &= bool(np.all(eps[upper] <= hi3 + slack) and np.all(eps[big] >= lo3 - slack))
    return PhaseReport(ok1, ok2, ok3, points, max_step)


@dataclass(frozen=True)
class EpsStarBoundReport:
    observed: float
    bound: float
    c_term: float
    satisfied: bool
    slack: float
    formal: bool


def eps_star_bound_check(fp: OneSidedFP, L: int) -> EpsStarBoundReport:
    """Compare |eps_map - eps*| against the bound; formal only for very large w."""
    l, r, w, Lp = fp.l, fp.r, fp.w, fp.Lp
    e = fp.ensemble
    xs = fp.values
    # x*_j sits at array index j + L'
    x0, x_mL, x_shift = xs[-1], xs[Lp - L], xs[L]
    c = (4 * l * r * w ** -0.125 + w * l * (2 + r) / L
         + l * r * (x_shift + x0 - x_mL)
         + 2 * r * l ** 2 / (1 - 4 * w ** -0.125) ** r * w ** -0.875)
    eps_map = thresholds_regular(e).eps_map
    observed = abs(eps_map - fp.eps_star)
    denom = (1 - (l - 1) ** (-1 / (r - 2))) ** 2
    bound = (2 * l * r * abs(x0 - stable_fp(e, fp.eps_star)) + c) / denom
    formal = w > max(2 ** 4 * l ** 2 * r ** 2, 2 ** 16)
    return EpsStarBoundReport(observed, bound, c, observed <= bound, bound - observed, formal)


@dataclass(frozen=True)
class FPDiagnostics:
    eps: float
    x_u: float
    x_s: float
    maximum_ok: bool
    spacing_ok: bool
    spacing_slack: float
    avgprop_ok: tuple[bool, bool, bool, bool]
    transition_count: int
    delta: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.maximum_ok and self.spacing_ok and all(self.avgprop_ok)


def fp_diagnostics(fp: OneSidedFP, delta: float = 0.05, slack: float = 1e-9) -> FPDiagnostics:
    """Check the structural bounds every proper one-sided FP must satisfy."""
    l, r, w = fp.l, fp.r, fp.w
    e = fp.ensemble
    eps, x = fp.eps_star, np.asarray(fp.values, dtype=float)
    n = len(x)
    violations = []

    land = h_landscape(eps, e) if eps > thresholds_regular(e).eps_bp else None
    x_u = land.x_u if land else float("nan")
    x_s = land.x_s if land else float("nan")
    maximum_ok = bool(land is not None and x_u - slack <= x[-1] <= x_s + slack)
    if not maximum_ok:
        violations.append("maximum")

    # extended sequence: zeros on the left, x_0 on the right
    pad = 2 * w
    ext = np.concatenate([np.zeros(pad), x, np.full(pad, x[-1])])

    def at(i):  # i is a section index in [-(n-1), 0] shifted by offsets
        return ext[i + (n - 1) + pad]

    spacing_slack = math.inf
    for i in range(-(n - 1) + 1, 1):
        xi = at(i)
        bound = eps * (l - 1) * (r - 1) * (xi / eps) ** ((l - 2) / (l - 1)) / w
        spacing_slack = min(spacing_slack, bound - (xi - at(i - 1)))
    spacing_ok = spacing_slack >= -slack
    if not spacing_ok:
        violations.append("spacing")

    ok = [True] * 4
    for i in range(-(n - 1), 1):
        xi = at(i)
        xbar = sum(at(i + j - k) for j in range(w) for k in range(w)) / w ** 2
        top = sum(at(i + w - 1 - k) for k in range(w)) / w
        checks = (
            xi <= eps * (1 - (1 - xbar) ** (r - 1)) ** (l - 1) + slack,
            xi <= eps * ((r - 1) * xbar) ** (l - 1) + slack,
            xi >= eps * xbar ** (l - 1) - slack,
            xi >= eps * ((1 - top) ** (r - 2) * (r - 1) * xbar) ** (l - 1) - slack,
        )
        for k, c in enumerate(checks):
            if not c:
                ok[k] = False
                violations.append(f"avgprop-{'i' * (k + 1) if k < 3 else 'iv'} at {i}")

    upper = x_s if land else 1.0
    count = int(np.count_nonzero((x > delta) & (x < upper - delta)))
    return FPDiagnostics(eps, x_u, x_s, maximum_ok, spacing_ok, float(spacing_slack),
                         tuple(ok), count, delta, violations)


@dataclass(frozen=True)
class StabilityVerdict:
    beta: float
    eps_beta: float
    eps_used: float
    max_excess: float
    holds: bool
    fixed_point: Constellation


def eps_beta(family: InterpolatedFamily, beta: float, alpha_grid=None) -> float:
    """Infimum of the finite local channel parameters over alpha in [beta, 1]."""
    grid = family.default_grid() if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    grid = np.unique(np.concatenate([grid[(grid >= beta)], [beta]]))
    best = math.inf
    for a in grid:
        c, eps = family.evaluate(float(a))
        finite = eps[np.isfinite(eps) & (c.values > 0)]
        if finite.size:
            best = min(best, float(finite.min()))
    return best


def stability_probe(family: InterpolatedFamily, beta: float, cfg: DEConfig | None = None,
                    factor: float = 0.95, eps: float | None = None) -> StabilityVerdict:
    """Forward DE below eps^(beta) must stay under x(beta)."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    eb = eps_beta(family, beta)
    if not (eb > 0 and math.isfinite(eb)):
        raise ValueError(f"eps^(beta) is undefined or non-positive: {eb}")
    use = factor * eb if eps is None else eps
    if use >= eb:
        raise ValueError("probe channel parameter must lie below eps^(beta)")
    fixed = forward_de(family.system, use, cfg=cfg)
    excess = float(np.max(fixed.values - family.x(beta)))
    return StabilityVerdict(beta, eb, use, excess, excess <= 1e-10, fixed)


__all__ = [
    "OneSidedFP", "AreaReport", "InterpolatedFamily", "EpsStarBoundReport", "FPDiagnostics",
    "StabilityVerdict", "length_bound", "construct_one_sided_fp", "one_sided_residual",
    "interpolate", "family_area", "gamma_phase3", "PhaseReport", "phase_bounds", "eps_star_bound_check", "fp_diagnostics",
    "eps_beta", "stability_probe",
]
