"""Small deterministic numeric helpers shared by the analysis modules."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


class BracketError(ValueError):
    """Raised when a root or threshold bracket has no sign change."""


class ConvergenceError(RuntimeError):
    """Raised when an iteration does not meet its tolerance.

    The last iterate is kept on ``last`` so callers can inspect it.
    """

    def __init__(self, message: str, last=None, iterations: int | None = None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


def ipow(x, n: int):
    """x**n for a non-negative integer n by repeated squaring.

    Works elementwise on arrays. The fixed multiplication order makes the
    result monotone in x and identical across platforms.
    """
    if n < 0:
        raise ValueError("exponent must be non-negative")
    result = np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) else 1.0
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
           max_iter: int = 200) -> float:
    """Root of f on [lo, hi] by plain bisection, returned as the bracket midpoint."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12,
                     max_depth: int = 50) -> float:
    """Integral of f over [a, b] by adaptive Simpson with Richardson correction."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0:
            raise ConvergenceError(f"quadrature did not converge on [{a}, {b}]")
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def h2(t):
    """Binary entropy in bits with 0 log 0 = 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    out[inside] = -(ti * np.log2(ti) + (1 - ti) * np.log2(1 - ti))
    return out if out.ndim else float(out)


def ceil_int(x: float) -> int:
    return int(math.ceil(x))
