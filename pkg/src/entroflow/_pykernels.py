"""NumPy implementation of the nodewise kernels.

Same signatures as the compiled ``_ckernels`` module.  Every scalar root
find is a safeguarded Newton iteration on a strictly increasing function:
a bracket ``[lo, hi]`` with ``f(lo) <= 0 <= f(hi)`` is kept, and a Newton
step that leaves the bracket is replaced by bisection.  The iteration is
vectorized over an active set of unconverged entries.
"""

import numpy as np
from scipy.linalg import solve_banded

NAME = "python"

REGULAR, LOGARITHMIC, INDICATOR = 0, 1, 2


def _safeguarded_newton(func, x, lo, hi, tol, maxit):
    """Vectorized bracketed Newton; returns (root, number of failures)."""
    x = x.copy()
    lo = lo.copy()
    hi = hi.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(maxit):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return x, 0
        xa = x[idx]
        f, df = func(xa, idx)
        done = np.abs(f) <= tol[idx]
        pos = f > 0
        hi[idx] = np.where(pos & ~done, xa, hi[idx])
        lo[idx] = np.where(~pos & ~done, xa, lo[idx])
        step = xa - f / df
        la, ha = lo[idx], hi[idx]
        outside = ~((step > la) & (step < ha))
        step = np.where(outside, 0.5 * (la + ha), step)
        # bracket collapsed to rounding level: accept the midpoint
        collapsed = (ha - la) <= 4.0 * np.spacing(np.maximum(np.abs(la), np.abs(ha)))
        # converged entries take one polishing Newton step
        x[idx] = np.where(done, xa - f / df, step)
        active[idx] = ~(done | collapsed)
    return x, int(np.count_nonzero(active))


def rho_log(eps, r, tol, maxit):
    """Solve rho + eps*ln(rho) = r for rho > 0, in the variable y = ln(rho).

    Returns ``(rho, y, nfail)``.
    """
    r = np.ascontiguousarray(r, dtype=float)
    scale = tol * np.maximum(1.0, np.abs(r))
    hi = np.minimum(r / eps, np.log(np.maximum(r, 1.0)))
    lo = np.minimum(0.0, (r - 1.0) / eps)

    def g(y, idx):
        e = np.exp(y)
        return e + eps * y - r[idx], e + eps

    y, nfail = _safeguarded_newton(g, hi, lo, hi, scale, maxit)
    return np.exp(y), y, nfail


def prox(kind, eps, r, tol, maxit):
    """Resolvent (I + eps*beta)^{-1}(r) for one of the three canonical graphs."""
    r = np.ascontiguousarray(r, dtype=float)
    if kind == INDICATOR:
        return np.clip(r, -1.0, 1.0), 0
    a = np.abs(r)
    sign = np.where(r < 0, -1.0, 1.0)
    scale = tol * np.maximum(1.0, a)
    if kind == REGULAR:
        # s + eps*s^3 = a on [0, min(a, cbrt(a/eps))]; convex, start from above
        hi = np.minimum(a, np.cbrt(a / eps))
        lo = np.zeros_like(a)

        def f(s, idx):
            return s + eps * s**3 - a[idx], 1.0 + 3.0 * eps * s**2

        s, nfail = _safeguarded_newton(f, hi, lo, hi, scale, maxit)
        return sign * s, nfail
    if kind == LOGARITHMIC:
        # s = tanh(t): tanh(t) + 2*eps*t = a; concave for t >= 0, start from below
        lo = a / (1.0 + 2.0 * eps)
        hi = a / (2.0 * eps)

        def f(t, idx):
            th = np.tanh(t)
            return th + 2.0 * eps * t - a[idx], (1.0 - th * th) + 2.0 * eps

        t, nfail = _safeguarded_newton(f, lo, lo, hi, scale, maxit)
        return sign * np.tanh(t), nfail
    raise ValueError(f"unknown graph kind {kind!r}")


def tridiag_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = diag.shape[0]
    ab = np.empty((3, n))
    ab[0, 1:] = upper[:-1]
    ab[0, 0] = 0.0
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    ab[2, -1] = 0.0
    return solve_banded((1, 1), ab, rhs, check_finite=False)
