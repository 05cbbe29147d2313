"""Compiled per-step DE kernels.

Both kernels combine operands in ascending order, so results depend only on
the multiset of inputs.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def ipow(x, n):
    result = 1.0
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


@njit(cache=True, nogil=True)
def _insertion_sort(buf, k):
    for i in range(1, k):
        v = buf[i]
        j = i - 1
        while j >= 0 and buf[j] > v:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = v


@njit(cache=True, nogil=True)
def _sorted_sum(buf, k):
    _insertion_sort(buf, k)
    s = buf[0]
    for i in range(1, k):
        s = s + buf[i]
    return s


@njit(cache=True, nogil=True)
def _sorted_prod(buf, k):
    if k == 0:
        return 1.0
    _insertion_sort(buf, k)
    p = buf[0]
    for i in range(1, k):
        p = p * buf[i]
    return p


@njit(cache=True, nogil=True)
def smoothed_base(x, r, w, one_sided):
    """1 - (1/w) sum_j f_{i+j} for every section of x."""
    n = x.shape[0]
    pad = w - 1
    xp = np.zeros(n + 2 * pad)
    for i in range(n):
        xp[pad + i] = x[i]
    if one_sided:
        for i in range(pad):
            xp[pad + n + i] = x[n - 1]
    nf = n + pad
    f = np.empty(nf)
    buf = np.empty(w)
    for m in range(nf):
        for k in range(w):
            buf[k] = xp[m + k]
        f[m] = ipow(1.0 - _sorted_sum(buf, w) / w, r - 1)
    out = np.empty(n)
    for i in range(n):
        for j in range(w):
            buf[j] = f[i + j]
        out[i] = 1.0 - _sorted_sum(buf, w) / w
    return out


@njit(cache=True, nogil=True)
def smoothed_g(x, l, r, w, one_sided):
    base = smoothed_base(x, r, w, one_sided)
    out = np.empty_like(base)
    for i in range(base.shape[0]):
        out[i] = ipow(base[i], l - 1)
    return out


@njit(cache=True, nogil=True)
def smoothed_exit(x, l, r, w, one_sided):
    base = smoothed_base(x, r, w, one_sided)
    out = np.empty_like(base)
    for i in range(base.shape[0]):
        out[i] = ipow(base[i], l)
    return out


@njit(cache=True, nogil=True)
def chain_check_messages(X, m):
    """Check-to-variable erasure probability for every (position, edge type)."""
    n, l = X.shape
    nc = n + l - 1
    Q = np.ones((nc, l))
    for t in range(l):
        for k in range(n):
            Q[k + t, t] = 1.0 - X[k, t]
    U = np.empty((n, l))
    buf = np.empty(l)
    for c in range(nc):
        for t in range(l):
            k = c - t
            if k < 0 or k >= n:
                continue
            cnt = 0
            for s in range(l):
                if s != t:
                    buf[cnt] = ipow(Q[c, s], m)
                    cnt += 1
            U[k, t] = 1.0 - ipow(Q[c, t], m - 1) * _sorted_prod(buf, cnt)
    return U


@njit(cache=True, nogil=True)
def chain_g(X, m):
    n, l = X.shape
    U = chain_check_messages(X, m)
    G = np.empty((n, l))
    buf = np.empty(l)
    for k in range(n):
        for t in range(l):
            cnt = 0
            for s in range(l):
                if s != t:
                    buf[cnt] = U[k, s]
                    cnt += 1
            G[k, t] = _sorted_prod(buf, cnt)
    return G


@njit(cache=True, nogil=True)
def chain_exit(X, m):
    n, l = X.shape
    U = chain_check_messages(X, m)
    h = np.empty(n)
    buf = np.empty(l)
    for k in range(n):
        for t in range(l):
            buf[t] = U[k, t]
        h[k] = _sorted_prod(buf, l)
    return h


@njit(cache=True, nogil=True)
def _sweep(x, new, eps, zero):
    """Copy new into x, scaling row k by eps[k]; return (change, max)."""
    change = 0.0
    top = 0.0
    for k in range(x.shape[0]):
        for t in range(x.shape[1]):
            v = eps[k] * new[k, t]
            d = abs(v - x[k, t])
            if d > change:
                change = d
            if v > top:
                top = v
            x[k, t] = v
    return change, top


@njit(cache=True, nogil=True)
def run_smoothed(x, eps, l, r, w, one_sided, tol, zero, max_iter):
    """Parallel-schedule DE on a smoothed system; returns (iterations, converged)."""
    y = x.reshape((x.shape[0], 1))
    for it in range(1, max_iter + 1):
        new = smoothed_g(x, l, r, w, one_sided).reshape((x.shape[0], 1))
        change, top = _sweep(y, new, eps, zero)
        if change < tol or top < zero:
            return it, True
    return max_iter, False


@njit(cache=True, nogil=True)
def run_chain(X, eps, m, tol, zero, max_iter):
    for it in range(1, max_iter + 1):
        change, top = _sweep(X, chain_g(X, m), eps, zero)
        if change < tol or top < zero:
            return it, True
    return max_iter, False
