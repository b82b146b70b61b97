"""Piecewise-linear finite elements with lumped mass on an interval.

All operators are tridiagonal and stored as three diagonals
``(lower, diag, upper)`` with ``lower[i]`` coupling node ``i`` to ``i-1``.
The Robin boundary term is diagonal and only touches the two end nodes.
"""

from functools import cached_property

import numpy as np

from ._backend import kernels
from .errors import PreconditionError


class Mesh:
    """Uniform 1D mesh of ``(0, length)`` with ``n_cells`` elements.

    Parameters
    ----------
    n_cells : int
        Number of elements; the mesh has ``n_cells + 1`` nodes.
    length : float
        Domain length ``L``.
    robin : tuple of float
        Robin coefficients ``(alpha_0, alpha_1)`` at ``x = 0`` and ``x = L``.
    """

    def __init__(self, n_cells, length=1.0, robin=(1.0, 1.0)):
        n_cells = int(n_cells)
        if n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {n_cells}")
        if not length > 0:
            raise ValueError(f"length must be positive, got {length}")
        alpha0, alpha1 = (float(a) for a in robin)
        if alpha0 < 0 or alpha1 < 0:
            raise ValueError("Robin coefficients must be nonnegative")
        self.n_cells = n_cells
        self.length = float(length)
        self.robin = (alpha0, alpha1)
        self.dx = self.length / n_cells
        self.nodes = np.linspace(0.0, self.length, n_cells + 1)
        mass = np.full(n_cells + 1, self.dx)
        mass[[0, -1]] = 0.5 * self.dx
        self.lumped_mass = mass
        self.lumped_mass.flags.writeable = False
        self.nodes.flags.writeable = False

    def __repr__(self):
        return f"Mesh(n_cells={self.n_cells}, length={self.length}, robin={self.robin})"

    @property
    def n_nodes(self):
        return self.n_cells + 1

    @cached_property
    def stiffness(self):
        """Diagonals of ``K``, the matrix of ``int u' v'``."""
        n = self.n_nodes
        k = 1.0 / self.dx
        diag = np.full(n, 2.0 * k)
        diag[[0, -1]] = k
        off = np.full(n, -k)
        lower = off.copy()
        lower[0] = 0.0
        upper = off.copy()
        upper[-1] = 0.0
        return lower, diag, upper

    @cached_property
    def robin_diag(self):
        """Diagonal of ``R``, the boundary form ``alpha_0 u(0)v(0) + alpha_1 u(L)v(L)``."""
        r = np.zeros(self.n_nodes)
        r[0], r[-1] = self.robin
        return r

    # -- products ----------------------------------------------------------

    def K(self, v):
        """Stiffness product ``K v``."""
        k = 1.0 / self.dx
        out = np.empty_like(v, dtype=float)
        d = np.diff(v) * k
        out[0] = -d[0]
        out[-1] = d[-1]
        out[1:-1] = d[:-1] - d[1:]
        return out

    def M(self, v):
        """Lumped mass product ``M v``."""
        return self.lumped_mass * v

    def inner(self, a, b):
        """Discrete ``L^2`` inner product ``(M a) . b``."""
        return float(np.dot(self.lumped_mass * a, b))

    def norm_H(self, v):
        return float(np.sqrt(self.inner(v, v)))

    def seminorm_grad(self, v):
        """``||grad v||`` of the piecewise-linear interpolant."""
        return float(np.sqrt(np.sum(np.diff(v) ** 2) / self.dx))

    def norm_V(self, v):
        """``(||grad v||^2 + ||v||^2)^{1/2}``."""
        return float(np.sqrt(self.seminorm_grad(v) ** 2 + self.inner(v, v)))

    def norm_W(self, v):
        """``(||v||^2 + ||Delta_h v||^2)^{1/2}`` with ``Delta_h = -M^{-1} K``."""
        lap = self.K(v) / self.lumped_mass
        return float(np.sqrt(self.inner(v, v) + self.inner(lap, lap)))

    def mean(self, v):
        """``(1/L) sum_i M_i v_i``."""
        return float(np.dot(self.lumped_mass, v)) / self.length

    def check(self, v, name="grid function"):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_nodes,):
            raise PreconditionError(f"{name} has shape {v.shape}, expected ({self.n_nodes},)")
        return v


def tridiag_matvec(lower, diag, upper, v):
    out = diag * v
    out[1:] += lower[1:] * v[:-1]
    out[:-1] += upper[:-1] * v[1:]
    return out


def neumann_green(m, g):
    """Discrete ``(1 - Delta)^{-1}``: the solution ``x`` of ``(M + K) x = M g``."""
    g = m.check(g)
    lower, diag, upper = m.stiffness
    return kernels.tridiag_solve(lower, diag + m.lumped_mass, upper, m.lumped_mass * g)


def zero_mean_green(m, v):
    """Discrete ``N``: zero-mean ``w`` with ``K w = M v`` for zero-mean ``v``."""
    v = m.check(v)
    rhs = m.lumped_mass * v
    total = float(np.sum(rhs))
    if abs(total) > 1e-10 * max(float(np.max(np.abs(v), initial=0.0)) * m.length, 1e-300):
        raise PreconditionError(f"zero_mean_green needs a zero-mean argument; integral is {total:.3e}")
    w = np.zeros(m.n_nodes)
    if m.n_nodes > 1:
        # pin w[0] = 0; the first equation is implied by the others since sum(rhs) = 0
        lower, diag, upper = m.stiffness
        w[1:] = kernels.tridiag_solve(lower[1:], diag[1:], upper[1:], rhs[1:])
    return w - m.mean(w)


def dual_norm_V0(m, v):
    """``||v||_{V0*} = ((M v) . N v)^{1/2}`` for zero-mean ``v``."""
    w = zero_mean_green(m, v)
    return float(np.sqrt(max(np.dot(m.lumped_mass * v, w), 0.0)))


def dual_norm_V(m, v):
    """``||v||_{V*} = ((M v) . w)^{1/2}`` with ``(M + K) w = M v``."""
    w = neumann_green(m, v)
    return float(np.sqrt(max(np.dot(m.lumped_mass * np.asarray(v, dtype=float), w), 0.0)))


def trace_equivalence_constants(m, rng, samples=200):
    """Measured ``(c1, c2)`` with ``c1 B(z) <= ||z||_V^2 <= c2 B(z)`` on random ``z``.

    Here ``B(z) = ||grad z||^2 + z(0)^2 + z(L)^2``.
    """
    ratios = []
    for _ in range(samples):
        z = rng.standard_normal(m.n_nodes)
        b = m.seminorm_grad(z) ** 2 + z[0] ** 2 + z[-1] ** 2
        ratios.append(m.norm_V(z) ** 2 / b)
    return float(min(ratios)), float(max(ratios))
