"""Maximal monotone graphs, their resolvents and Yosida regularizations.

Three canonical convex potentials are supported::

    regular      betahat(r) = r^4 / 4
    logarithmic  betahat(r) = (1+r) ln(1+r) + (1-r) ln(1-r)   on [-1, 1]
    indicator    betahat(r) = 0                               on [-1, 1]

(the last two are ``+inf`` outside ``[-1, 1]``).  For ``eps > 0`` the
resolvent ``J = (I + eps*beta)^{-1}``, the Yosida approximation
``beta_eps = (I - J)/eps`` and the Moreau envelope ``betahat_eps`` are
single valued and Lipschitz on the whole real line.

The module also provides the regularized logarithm family used for the
temperature variable (``rho``, ``ln_eps``, ``Ln_eps``) and the truncated
latent-heat function ``lambda_eps``.

All functions accept a float or an array and return the same kind.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import SolverFailure

ROOT_TOL = 1e-13
ROOT_MAXIT = 100


class GraphSpec(enum.Enum):
    """Which maximal monotone graph ``beta = d(betahat)`` is used."""

    REGULAR = "regular"
    LOGARITHMIC = "logarithmic"
    INDICATOR = "indicator"

    @property
    def code(self):
        return _CODES[self]

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            choices = ", ".join(g.value for g in cls)
            raise ValueError(f"unknown graph {name!r}; expected one of: {choices}") from None

    @property
    def domain(self):
        """Closed effective domain of betahat as ``(lo, hi)``."""
        if self is GraphSpec.REGULAR:
            return (-math.inf, math.inf)
        return (-1.0, 1.0)


_CODES = {GraphSpec.REGULAR: 0, GraphSpec.LOGARITHMIC: 1, GraphSpec.INDICATOR: 2}


def _wrap(r):
    arr = np.asarray(r, dtype=float)
    return np.atleast_1d(arr).ravel(), arr.shape, arr.ndim == 0


def _unwrap(values, shape, scalar):
    if scalar:
        return float(values[0])
    return values.reshape(shape)


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")


# ---------------------------------------------------------------------------
# graphs

def betahat(g, r):
    """Convex potential; ``math.inf`` outside the effective domain."""
    g = GraphSpec.parse(g)
    x, shape, scalar = _wrap(r)
    if g is GraphSpec.REGULAR:
        out = 0.25 * x**4
    else:
        out = np.full(x.shape, math.inf)
        inside = np.abs(x) <= 1.0
        if g is GraphSpec.INDICATOR:
            out[inside] = 0.0
        else:
            xi = x[inside]
            with np.errstate(divide="ignore", invalid="ignore"):
                val = (1.0 + xi) * np.log1p(xi) + (1.0 - xi) * np.log1p(-xi)
            val[np.abs(xi) == 1.0] = 2.0 * math.log(2.0)
            out[inside] = val
    return _unwrap(out, shape, scalar)


def prox(g, eps, r):
    """Resolvent ``J_eps(r)``: the unique ``s`` with ``s + eps*beta(s) = r``."""
    g = GraphSpec.parse(g)
    _check_eps(eps)
    x, shape, scalar = _wrap(r)
    s, nfail = kernels.prox(g.code, float(eps), x, ROOT_TOL, ROOT_MAXIT)
    if nfail:
        raise SolverFailure(f"resolvent of {g.value} graph did not converge at {nfail} point(s)")
    return _unwrap(s, shape, scalar)


def yosida(g, eps, r):
    """Yosida approximation ``beta_eps(r) = (r - J_eps(r)) / eps``."""
    x, shape, scalar = _wrap(r)
    out = (x - prox(g, eps, x)) / eps
    return _unwrap(out, shape, scalar)


def yosida_prime(g, eps, r):
    """Derivative of ``beta_eps``.

    For the indicator graph the a.e. derivative is used, with value 0 at
    the kinks ``|r| = 1``.
    """
    g = GraphSpec.parse(g)
    x, shape, scalar = _wrap(r)
    if g is GraphSpec.INDICATOR:
        out = np.where(np.abs(x) > 1.0, 1.0 / eps, 0.0)
    else:
        j = prox(g, eps, x)
        if g is GraphSpec.REGULAR:
            out = 3.0 * j * j / (1.0 + 3.0 * eps * j * j)
        else:
            # beta' = 2/(1-s^2); beta'/(1+eps*beta') written to stay finite at |s| -> 1
            out = 1.0 / (eps + 0.5 * (1.0 - j) * (1.0 + j))
    return _unwrap(out, shape, scalar)


def moreau(g, eps, r):
    """Moreau envelope ``|r - J|^2/(2 eps) + betahat(J)`` with ``J = prox(r)``."""
    x, shape, scalar = _wrap(r)
    j = prox(g, eps, x)
    out = (x - j) ** 2 / (2.0 * eps) + betahat(g, j)
    return _unwrap(out, shape, scalar)


def coercivity_constant(g, eps, gamma, radius=10.0, samples=4001):
    """Smallest ``C`` with ``betahat_eps(r)/2 >= (gamma/2) r^2 - C`` on samples.

    Measured over ``samples`` equispaced points of ``[-radius, radius]``.
    """
    r = np.linspace(-radius, radius, samples)
    return float(np.max(0.5 * gamma * r * r - 0.5 * moreau(g, eps, r)))


# ---------------------------------------------------------------------------
# regularized logarithm

def _rho_log(eps, x):
    _check_eps(eps)
    rho_, y, nfail = kernels.rho_log(float(eps), x, ROOT_TOL, ROOT_MAXIT)
    if nfail:
        raise SolverFailure(f"rho_eps did not converge at {nfail} point(s)")
    return rho_, y


def rho(eps, r):
    """Resolvent of ``ln``: the positive solution of ``rho + eps*ln(rho) = r``.

    Underflows to 0.0 once ``r/eps`` is below about -745; ``ln_eps`` carries
    the logarithm exactly in that range.
    """
    x, shape, scalar = _wrap(r)
    return _unwrap(_rho_log(eps, x)[0], shape, scalar)


def ln_eps(eps, r):
    """Yosida approximation of ``ln``: ``ln(rho_eps(r)) = (r - rho_eps(r))/eps``."""
    x, shape, scalar = _wrap(r)
    return _unwrap(_rho_log(eps, x)[1], shape, scalar)


def Ln_eps(eps, r):
    """``eps*r + ln_eps(r)``; strictly increasing with slope at least ``eps``."""
    x, shape, scalar = _wrap(r)
    return _unwrap(eps * x + _rho_log(eps, x)[1], shape, scalar)


def Ln_eps_prime(eps, r):
    """``eps + 1/(rho_eps(r) + eps)``."""
    x, shape, scalar = _wrap(r)
    return _unwrap(eps + 1.0 / (_rho_log(eps, x)[0] + eps), shape, scalar)


def Ln_eps_with_prime(eps, r):
    """``(Ln_eps(r), Ln_eps'(r))`` from a single root solve; arrays only."""
    x = np.asarray(r, dtype=float)
    rho_, y = _rho_log(eps, x.ravel())
    return (eps * x + y.reshape(x.shape), (eps + 1.0 / (rho_ + eps)).reshape(x.shape))


# ---------------------------------------------------------------------------
# latent heat

@dataclass(frozen=True)
class LatentHeat:
    """Quadratic latent-heat function ``lambda(r) = a1*r + a2*r^2``."""

    a1: float = 1.0
    a2: float = -1.0

    def value(self, r):
        return self.a1 * r + self.a2 * r * r

    def prime(self, r):
        return self.a1 + 2.0 * self.a2 * r

    def sup_prime(self, eps):
        """``sup |lambda_eps'|``, attained at ``r = -sign(a1*a2)/eps``."""
        return abs(self.a1) + 2.0 * abs(self.a2) / eps

    def bound(self):
        """``|lambda(0)| + |lambda'(0)| + sup|lambda''|``; bounds every truncation."""
        return abs(self.a1) + 2.0 * abs(self.a2)


def lambda_trunc(lh, eps, r):
    """Truncation of ``lambda``: unchanged on ``[-1/eps, 1/eps]``, affine outside."""
    _check_eps(eps)
    x, shape, scalar = _wrap(r)
    c = 1.0 / eps
    xc = np.clip(x, -c, c)
    out = lh.value(xc) + lh.prime(xc) * (x - xc)
    return _unwrap(out, shape, scalar)


def lambda_trunc_prime(lh, eps, r):
    """Derivative of ``lambda_trunc``: ``lambda'`` evaluated at the clamped argument."""
    _check_eps(eps)
    x, shape, scalar = _wrap(r)
    c = 1.0 / eps
    return _unwrap(lh.prime(np.clip(x, -c, c)), shape, scalar)


def lambda_trunc_second(lh, eps, r):
    """A.e. second derivative (0 outside ``[-1/eps, 1/eps]``)."""
    _check_eps(eps)
    x, shape, scalar = _wrap(r)
    out = np.where(np.abs(x) <= 1.0 / eps, 2.0 * lh.a2, 0.0)
    return _unwrap(out, shape, scalar)
