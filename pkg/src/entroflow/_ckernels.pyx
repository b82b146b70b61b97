# Compiled nodewise kernels; mirrors entroflow._pykernels one-to-one.
import numpy as np

from libc.math cimport exp, log, tanh, fabs, cbrt, nextafter, INFINITY

NAME = "cython"

DEF REGULAR = 0
DEF LOGARITHMIC = 1
DEF INDICATOR = 2


cdef inline double _ulp4(double lo, double hi) noexcept nogil:
    cdef double m = fabs(lo) if fabs(lo) > fabs(hi) else fabs(hi)
    return 4.0 * (nextafter(m, INFINITY) - m)


cdef int _rho_one(double eps, double r, double tol, int maxit,
                  double *rho, double *y_out) noexcept nogil:
    cdef double lo, hi, y, e, g, dg, step, scale
    cdef int it
    scale = tol * (fabs(r) if fabs(r) > 1.0 else 1.0)
    hi = r / eps
    if r > 1.0 and log(r) < hi:
        hi = log(r)
    elif r <= 1.0 and 0.0 < hi:
        hi = 0.0
    lo = (r - 1.0) / eps
    if lo > 0.0:
        lo = 0.0
    y = hi
    for it in range(maxit):
        e = exp(y)
        g = e + eps * y - r
        dg = e + eps
        if fabs(g) <= scale:
            # one polishing step: residual is already tiny, Newton is safe
            y = y - g / dg
            rho[0] = exp(y)
            y_out[0] = y
            return 0
        if g > 0.0:
            hi = y
        else:
            lo = y
        step = y - g / dg
        if not (step > lo and step < hi):
            step = 0.5 * (lo + hi)
        if hi - lo <= _ulp4(lo, hi):
            rho[0] = exp(step)
            y_out[0] = step
            return 0
        y = step
    rho[0] = exp(y)
    y_out[0] = y
    return 1


def rho_log(double eps, r, double tol, int maxit):
    """Solve rho + eps*ln(rho) = r; returns (rho, ln rho, nfail)."""
    cdef double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], i
    rho = np.empty(n)
    y = np.empty(n)
    cdef double[::1] rho_v = rho
    cdef double[::1] y_v = y
    cdef int nfail = 0
    with nogil:
        for i in range(n):
            nfail += _rho_one(eps, rv[i], tol, maxit, &rho_v[i], &y_v[i])
    return rho, y, nfail


cdef int _prox_regular(double eps, double a, double tol, int maxit,
                       double *out) noexcept nogil:
    # s + eps*s^3 = a, a >= 0
    cdef double lo = 0.0, hi, s, f, step, scale
    cdef int it
    scale = tol * (a if a > 1.0 else 1.0)
    hi = cbrt(a / eps)
    if a < hi:
        hi = a
    s = hi
    for it in range(maxit):
        f = s + eps * s * s * s - a
        if fabs(f) <= scale:
            out[0] = s - f / (1.0 + 3.0 * eps * s * s)
            return 0
        if f > 0.0:
            hi = s
        else:
            lo = s
        step = s - f / (1.0 + 3.0 * eps * s * s)
        if not (step > lo and step < hi):
            step = 0.5 * (lo + hi)
        if hi - lo <= _ulp4(lo, hi):
            out[0] = step
            return 0
        s = step
    out[0] = s
    return 1


cdef int _prox_log(double eps, double a, double tol, int maxit,
                   double *out) noexcept nogil:
    # tanh(t) + 2*eps*t = a, a >= 0; returns s = tanh(t)
    cdef double lo, hi, t, th, f, step, scale
    cdef int it
    scale = tol * (a if a > 1.0 else 1.0)
    lo = a / (1.0 + 2.0 * eps)
    hi = a / (2.0 * eps)
    t = lo
    for it in range(maxit):
        th = tanh(t)
        f = th + 2.0 * eps * t - a
        if fabs(f) <= scale:
            out[0] = tanh(t - f / ((1.0 - th * th) + 2.0 * eps))
            return 0
        if f > 0.0:
            hi = t
        else:
            lo = t
        step = t - f / ((1.0 - th * th) + 2.0 * eps)
        if not (step > lo and step < hi):
            step = 0.5 * (lo + hi)
        if hi - lo <= _ulp4(lo, hi):
            out[0] = tanh(step)
            return 0
        t = step
    out[0] = tanh(t)
    return 1


def prox(int kind, double eps, r, double tol, int maxit):
    """Resolvent of the graph ``kind``; returns (J, nfail)."""
    cdef double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef int nfail = 0
    cdef double a, s
    if kind not in (REGULAR, LOGARITHMIC, INDICATOR):
        raise ValueError(f"unknown graph kind {kind!r}")
    with nogil:
        for i in range(n):
            a = fabs(rv[i])
            if kind == INDICATOR:
                s = a if a < 1.0 else 1.0
            elif kind == REGULAR:
                nfail += _prox_regular(eps, a, tol, maxit, &s)
            else:
                nfail += _prox_log(eps, a, tol, maxit, &s)
            ov[i] = -s if rv[i] < 0.0 else s
    return out, nfail


def tridiag_solve(lower, diag, upper, rhs):
    """Thomas algorithm; ``lower[0]`` and ``upper[-1]`` are ignored."""
    cdef double[::1] a = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0], i
    x = np.empty(n)
    cp = np.empty(n)
    cdef double[::1] xv = x
    cdef double[::1] cpv = cp
    cdef double m
    with nogil:
        cpv[0] = c[0] / b[0]
        xv[0] = d[0] / b[0]
        for i in range(1, n):
            m = b[i] - a[i] * cpv[i - 1]
            cpv[i] = c[i] / m
            xv[i] = (d[i] - a[i] * xv[i - 1]) / m
        for i in range(n - 2, -1, -1):
            xv[i] = xv[i] - cpv[i] * xv[i + 1]
    return x
