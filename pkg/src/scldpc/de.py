"""Density evolution for the smoothed (l, r, L, w) and chain (l, r, L) ensembles.

Sums and products over a section's neighbourhood are taken over sorted
operands. The result then depends only on the multiset of inputs, so a
mirrored constellation maps to the mirrored image bit for bit, and every
update is exactly monotone in its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from ._numeric import BracketError, ConvergenceError
from .ensemble import ChainParams, RegularEnsemble, SmoothedParams

Params = Union[SmoothedParams, ChainParams]


NEAR_THRESHOLD_MAX_ITER = 100_000_000


@dataclass(frozen=True)
class DEConfig:
    tol: float = 1e-12
    max_iter: int = 1_000_000
    zero_threshold: float = 1e-10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class Schedule:
    """Admissible update schedule.

    kind is "parallel", "round-robin" (sections split into ``blocks``
    contiguous blocks updated cyclically) or "random" (each section joins a
    step with probability ``fraction``; a section idle for ``window - 1``
    steps is forced in).
    """

    kind: str = "parallel"
    blocks: int = 2
    fraction: float = 0.5
    window: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("parallel", "round-robin", "random"):
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.blocks < 1 or self.window < 1 or not 0 < self.fraction <= 1:
            raise ValueError("invalid schedule parameters")

    @property
    def fairness_window(self) -> int:
        return {"parallel": 1, "round-robin": self.blocks, "random": self.window}[self.kind]


@dataclass(frozen=True)
class Constellation:
    """Per-section erasure probabilities on [-L, L], or [-L, 0] when one-sided.

    Chain constellations carry one message per edge type, shape (n, l); the
    section value is their mean.
    """

    values: np.ndarray
    one_sided: bool = False
    iterations: int = field(default=0, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2) or not np.all(np.isfinite(v)):
            raise ValueError("constellation values must be a finite 1-d or 2-d array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def L(self) -> int:
        return self.n - 1 if self.one_sided else (self.n - 1) // 2

    @property
    def sections(self) -> np.ndarray:
        if self.values.ndim == 1:
            return self.values
        return sorted_sum(self.values) / self.values.shape[1]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.L, 1 if self.one_sided else self.L + 1)

    def entropy(self) -> float:
        return entropy(self)


def sorted_sum(a: np.ndarray) -> np.ndarray:
    """Sum along the last axis in ascending order of the operands."""
    s = np.sort(a, axis=-1)
    out = s[..., 0].copy()
    for k in range(1, s.shape[-1]):
        out = out + s[..., k]
    return out


def sorted_prod(a: np.ndarray) -> np.ndarray:
    s = np.sort(a, axis=-1)
    out = s[..., 0].copy()
    for k in range(1, s.shape[-1]):
        out = out * s[..., k]
    return out


def entropy(c: Constellation) -> float:
    """Normalised entropy: mean section value (divisor 2L+1, or L+1 one-sided)."""
    s = np.sort(c.sections)
    return float(sorted_sum(s) / s.size)


class SmoothedSystem:
    """DE map of the (l, r, L, w) ensemble, x_i = eps_i * g_i(x)."""

    variant = "smoothed"

    def __init__(self, params: SmoothedParams, one_sided: bool = False):
        self.params = params
        self.one_sided = one_sided
        self.l, self.r, self.w = params.base.l, params.base.r, params.w
        self.n = params.L + 1 if one_sided else 2 * params.L + 1
        self.shape = (self.n,)

    def g(self, x: np.ndarray) -> np.ndarray:
        return _kernels.smoothed_g(np.asarray(x, dtype=float), self.l, self.r, self.w,
                                   self.one_sided)

    def exit_values(self, x: np.ndarray) -> np.ndarray:
        """h_i = g_i^(l/(l-1))."""
        return _kernels.smoothed_exit(np.asarray(x, dtype=float), self.l, self.r, self.w,
                                      self.one_sided)

    def run(self, x: np.ndarray, eps: np.ndarray, cfg: DEConfig) -> tuple[int, bool]:
        """Parallel DE in place on x."""
        return _kernels.run_smoothed(x, eps, self.l, self.r, self.w, self.one_sided,
                                     cfg.tol, cfg.zero_threshold, cfg.max_iter)

    def sections(self, x: np.ndarray) -> np.ndarray:
        return x

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    def section_eps(self, eps) -> np.ndarray | float:
        return eps


class ChainSystem:
    """Edge-type DE of the (l, r=kl, L) chain.

    X[k, t] is the erasure probability of a message from position k to the
    check at position k + t - lhat. A check collects r/l edges from each of
    the positions within lhat of it; positions outside [-L, L] are absent and
    act as known bits.
    """

    variant = "chain"

    def __init__(self, params: ChainParams):
        self.params = params
        self.one_sided = False
        self.l, self.r = params.base.l, params.base.r
        self.m = params.k
        self.n = 2 * params.L + 1
        self.shape = (self.n, self.l)

    def check_messages(self, X: np.ndarray) -> np.ndarray:
        """Check-to-variable erasure probabilities seen by each (position, edge type)."""
        return _kernels.chain_check_messages(np.asarray(X, dtype=float), self.m)

    def g(self, X: np.ndarray) -> np.ndarray:
        return _kernels.chain_g(np.asarray(X, dtype=float), self.m)

    def exit_values(self, X: np.ndarray) -> np.ndarray:
        return _kernels.chain_exit(np.asarray(X, dtype=float), self.m)

    def run(self, X: np.ndarray, eps: np.ndarray, cfg: DEConfig) -> tuple[int, bool]:
        return _kernels.run_chain(X, eps, self.m, cfg.tol, cfg.zero_threshold, cfg.max_iter)

    def sections(self, X: np.ndarray) -> np.ndarray:
        return sorted_sum(X) / self.l

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    def section_eps(self, eps):
        eps = np.asarray(eps, dtype=float)
        return eps[:, None] if eps.ndim == 1 else float(eps)


System = Union[SmoothedSystem, ChainSystem]


def make_system(params, one_sided: bool = False) -> System:
    if isinstance(params, (SmoothedSystem, ChainSystem)):
        return params
    if isinstance(params, SmoothedParams):
        return SmoothedSystem(params, one_sided)
    if isinstance(params, ChainParams):
        if one_sided:
            raise ValueError("one-sided DE is defined for the smoothed ensemble only")
        return ChainSystem(params)
    raise TypeError(f"unsupported parameters {params!r}")


def variant_params(base: RegularEnsemble, L: int, w: int | None, variant: str) -> Params:
    if variant == "chain":
        return ChainParams(base, L)
    if variant == "smoothed":
        return SmoothedParams(base, L, w if w is not None else 1)
    raise ValueError(f"unknown variant {variant!r}")


def _check_eps(eps, n: int):
    if np.ndim(eps) == 0:
        if not (np.isfinite(eps) and eps >= 0):
            raise ValueError("channel parameter must be finite and non-negative")
        return float(eps)
    prof = np.asarray(eps, dtype=float)
    if prof.shape != (n,):
        raise ValueError(f"epsilon profile has shape {prof.shape}, expected ({n},)")
    if not (np.all(np.isfinite(prof)) and np.all(prof >= 0)):
        raise ValueError("epsilon profile entries must be finite and non-negative")
    return prof


def de_step(c: Constellation, eps, params) -> Constellation:
    """One synchronous DE update of every section."""
    system = make_system(params, c.one_sided)
    if c.values.shape != system.shape:
        raise ValueError(f"constellation shape {c.values.shape} does not match {system.shape}")
    prof = system.section_eps(_check_eps(eps, system.n))
    return Constellation(prof * system.g(c.values), c.one_sided, c.iterations + 1)


def de_residual(c: Constellation, eps, params) -> float:
    """Sup-norm distance between c and its DE image."""
    return float(np.max(np.abs(de_step(c, eps, params).values - c.values)))


def _iterate(system: System, eps, sched: Schedule, cfg: DEConfig, start: np.ndarray,
             monitor=None) -> tuple[np.ndarray, int]:
    checked = _check_eps(eps, system.n)
    x = start.copy()
    if sched.kind == "parallel" and monitor is None:
        it, ok = system.run(x, np.broadcast_to(checked, (system.n,)).astype(float), cfg)
        if not ok:
            raise ConvergenceError(f"DE did not converge in {cfg.max_iter} iterations",
                                   last=Constellation(x, system.one_sided, it), iterations=it)
        return x, it
    prof = system.section_eps(checked)
    rng = np.random.default_rng(sched.seed)
    idle = np.zeros(system.n, dtype=int)
    window = sched.fairness_window
    bounds = np.linspace(0, system.n, min(sched.blocks, system.n) + 1).astype(int)
    for it in range(1, cfg.max_iter + 1):
        new = prof * system.g(x)
        if sched.kind == "parallel":
            mask = None
        elif sched.kind == "round-robin":
            b = (it - 1) % (len(bounds) - 1)
            mask = np.zeros(system.n, dtype=bool)
            mask[bounds[b]:bounds[b + 1]] = True
        else:
            mask = (rng.random(system.n) < sched.fraction) | (idle >= window - 1)
            idle = np.where(mask, 0, idle + 1)
        if mask is None:
            change = float(np.max(np.abs(new - x)))
            if monitor is not None:
                monitor(x, new)
            x = new
            if change < cfg.tol or np.max(x) < cfg.zero_threshold:
                return x, it
        else:
            residual = float(np.max(np.abs(new - x)))
            x = x.copy()
            x[mask] = new[mask]
            if np.max(x) < cfg.zero_threshold:
                return x, it
            if it % window == 0 and residual < cfg.tol:
                return x, it
    raise ConvergenceError(f"DE did not converge in {cfg.max_iter} iterations",
                           last=Constellation(x, system.one_sided, cfg.max_iter),
                           iterations=cfg.max_iter)


def forward_de(params, eps, sched: Schedule | None = None, cfg: DEConfig | None = None,
               monitor=None) -> Constellation:
    """Forward DE from the all-one constellation to a fixed point.

    ``monitor(x_old, x_new)`` is called after each parallel step.
    """
    system = make_system(params)
    sched, cfg = sched or Schedule(), cfg or DEConfig()
    x, it = _iterate(system, eps, sched, cfg, system.full(1.0), monitor)
    return Constellation(x, False, it)


def one_sided_forward_de(params: SmoothedParams, eps, cfg: DEConfig | None = None,
                         sched: Schedule | None = None) -> Constellation:
    """Forward DE on [-L, 0] with x_i = x_0 for i > 0."""
    system = make_system(params, one_sided=True)
    sched, cfg = sched or Schedule(), cfg or DEConfig()
    x, it = _iterate(system, eps, sched, cfg, system.full(1.0))
    return Constellation(x, True, it)


def is_trivial(c: Constellation, cfg: DEConfig | None = None) -> bool:
    cfg = cfg or DEConfig()
    return bool(np.max(c.values) < cfg.zero_threshold)


def classify_one_sided(c: Constellation, cfg: DEConfig | None = None, slack: float = 1e-14) -> str:
    """'trivial' or 'proper'; a nontrivial FP that is not non-decreasing is 'improper'."""
    if is_trivial(c, cfg):
        return "trivial"
    return "proper" if np.all(np.diff(c.sections) >= -slack) else "improper"


def bp_threshold_coupled(params, cfg: DEConfig | None = None, bisect_tol: float = 1e-7,
                         lo: float = 0.01, hi: float = 0.999) -> float:
    """Largest eps for which forward DE collapses to zero, by bisection."""
    if bisect_tol < 1e-7:
        raise ValueError("bisect_tol must be at least 1e-7")
    # DE slows down sharply next to the threshold
    cfg = cfg or DEConfig(max_iter=NEAR_THRESHOLD_MAX_ITER)
    system = make_system(params)

    def trivial(eps):
        return is_trivial(forward_de(system, eps, cfg=cfg), cfg)

    if not trivial(lo):
        raise BracketError(f"forward DE is nontrivial at the lower end {lo}")
    if trivial(hi):
        raise BracketError(f"forward DE is trivial at the upper end {hi}")
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if trivial(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
