"""Brute-force reference computations used to validate the solver.

Nothing here shares code paths with the production solver beyond the
model coefficients: matrices are assembled densely from scratch, scalar
resolvents are found by bracketing root finders from SciPy, and the
coupled step is solved monolithically by damped Newton on the stacked
unknown ``(theta, phi)`` with an analytically assembled Jacobian.
"""

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import brentq

from .errors import EntroflowError
from .graphs import GraphSpec

MAX_NODES = 9


class OracleError(EntroflowError):
    """The reference computation itself failed (a test-infrastructure fault)."""


# ---------------------------------------------------------------------------
# scalar references


def _rho_ref(eps, r):
    # rho + eps*ln(rho) = r, solved in y = ln(rho)
    g = lambda y: math.exp(y) + eps * y - r  # noqa: E731
    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo *= 2.0
    while g(hi) < 0:
        hi *= 2.0
    y = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(y), y


def _prox_ref(g, eps, r):
    if g is GraphSpec.INDICATOR:
        return min(1.0, max(-1.0, r))
    if r == 0.0:
        return 0.0
    a = abs(r)
    if g is GraphSpec.REGULAR:
        s = brentq(lambda s: s + eps * s**3 - a, 0.0, a, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    else:
        # s + eps*ln((1+s)/(1-s)) = a, via s = tanh(t)
        t = brentq(lambda t: math.tanh(t) + 2.0 * eps * t - a, 0.0, a / (2.0 * eps),
                   xtol=1e-16, rtol=4 * np.finfo(float).eps)
        s = math.tanh(t)
    return math.copysign(s, r)


def _yosida_and_slope(g, eps, r):
    s = _prox_ref(g, eps, r)
    val = (r - s) / eps
    if g is GraphSpec.INDICATOR:
        slope = 1.0 / eps if abs(r) > 1.0 else 0.0
    elif g is GraphSpec.REGULAR:
        slope = 3 * s * s / (1 + 3 * eps * s * s)
    else:
        slope = 2.0 / (1.0 - s * s + 2.0 * eps)
    return val, slope


def _betahat_mp(g, s):
    if g is GraphSpec.REGULAR:
        return s**4 / 4
    if abs(s) > 1:
        return mpmath.inf
    if g is GraphSpec.INDICATOR:
        return mpmath.mpf(0)
    if abs(s) == 1:
        return 2 * mpmath.log(2)
    return (1 + s) * mpmath.log(1 + s) + (1 - s) * mpmath.log(1 - s)


def _betahat_grid(g, s):
    # float64 potential on a grid inside the domain, used only to bracket the minimizer
    if g is GraphSpec.REGULAR:
        return s**4 / 4
    if g is GraphSpec.INDICATOR:
        return np.zeros_like(s)
    out = np.full(s.shape, 2.0 * math.log(2.0))
    inner = np.abs(s) < 1.0
    si = s[inner]
    out[inner] = (1 + si) * np.log1p(si) + (1 - si) * np.log1p(-si)
    return out


def prox_bruteforce(g, eps, r, grid_step=1e-3, tol=1e-10):
    """Minimizer of ``(r - s)^2/(2 eps) + betahat(s)`` by search and refinement.

    A grid search with spacing ``grid_step`` on the bracket between 0 and
    ``r`` (intersected with the domain) is followed by golden-section
    refinement in 40-digit arithmetic until the bracket is below ``tol``.
    """
    g = GraphSpec.parse(g)
    if not eps > 0:
        raise ValueError("eps must be positive")
    lo, hi = min(0.0, r), max(0.0, r)
    d_lo, d_hi = g.domain
    lo, hi = max(lo, d_lo), min(hi, d_hi)
    if hi - lo == 0.0:
        return float(lo)
    with mpmath.workdps(40):
        eps_mp = mpmath.mpf(eps)
        r_mp = mpmath.mpf(r)

        def phi(s):
            return (r_mp - s) ** 2 / (2 * eps_mp) + _betahat_mp(g, s)

        n = max(2, int(math.ceil((hi - lo) / grid_step)))
        grid = np.linspace(lo, hi, n + 1)
        k = int(np.argmin((r - grid) ** 2 / (2.0 * eps) + _betahat_grid(g, grid)))
        a = mpmath.mpf(float(grid[max(k - 1, 0)]))
        b = mpmath.mpf(float(grid[min(k + 1, n)]))
        inv_phi = (mpmath.sqrt(5) - 1) / 2
        c = b - inv_phi * (b - a)
        d = a + inv_phi * (b - a)
        fc, fd = phi(c), phi(d)
        while b - a > tol:
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - inv_phi * (b - a)
                fc = phi(c)
            else:
                a, c, fc = c, d, fd
                d = a + inv_phi * (b - a)
                fd = phi(d)
        return float((a + b) / 2)


def fd_check(f, df, x, step=1e-5, side="central"):
    """Relative error ``|fd - df(x)| / max(1, |df(x)|)`` of a difference quotient.

    ``side`` selects central, left (backward) or right (forward) differences.
    For array ``x`` the largest error over the points is returned.
    """
    if side == "central":
        fd = (f(x + step) - f(x - step)) / (2.0 * step)
    elif side == "left":
        fd = (f(x) - f(x - step)) / step
    elif side == "right":
        fd = (f(x + step) - f(x)) / step
    else:
        raise ValueError(f"unknown side {side!r}")
    exact = df(x)
    err = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
    return float(np.max(err))


# ---------------------------------------------------------------------------
# dense single-step problem


def dense_matrices(n_cells, length, robin):
    """Dense lumped mass, stiffness and Robin matrices, assembled element by element."""
    n = n_cells + 1
    dx = length / n_cells
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for e in range(n_cells):
        idx = [e, e + 1]
        # lumped element mass: row sums of dx/6 * [[2, 1], [1, 2]]
        M[np.ix_(idx, idx)] += np.diag([dx / 2.0, dx / 2.0])
        K[np.ix_(idx, idx)] += np.array([[1.0, -1.0], [-1.0, 1.0]]) / dx
    R = np.zeros((n, n))
    R[0, 0], R[-1, -1] = robin
    return M, K, R


@dataclass
class DenseStepProblem:
    """One step from ``(theta_n, phi_n, mu_n)`` with interval-averaged data."""

    params: object
    n_cells: int
    length: float
    robin: tuple
    h: float
    theta_n: np.ndarray
    phi_n: np.ndarray
    mu_n: np.ndarray
    f: np.ndarray            # nodal interval average of the source
    theta_gamma: tuple       # interval averages at the two ends

    def __post_init__(self):
        if self.n_cells + 1 > MAX_NODES:
            raise OracleError(f"dense oracle is limited to {MAX_NODES} nodes")
        for name in ("theta_n", "phi_n", "mu_n", "f"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))


@dataclass
class DenseSolution:
    theta: np.ndarray
    phi: np.ndarray
    mu: np.ndarray
    iterations: int
    damped_steps: int
    residual: float


class _Dense:
    def __init__(self, prob):
        p = prob.params
        self.p = p
        self.g = p.graph
        self.prob = prob
        M, K, R = dense_matrices(prob.n_cells, prob.length, prob.robin)
        self.M, self.K, self.R = M, K, R
        self.mass = np.diag(M)
        self.G = np.linalg.solve(M + K, M)
        n = M.shape[0]
        self.n = n
        lam1 = np.array([p.latent.prime(np.clip(x, -1 / p.eps, 1 / p.eps)) for x in prob.phi_n])
        self.lam1 = lam1
        u_n = np.array([p.eps * x + _rho_ref(p.eps, x)[1] for x in prob.theta_n])
        tg = np.zeros(n)
        tg[0], tg[-1] = prob.theta_gamma
        h = prob.h
        self.rhs_A = h * M @ prob.f + p.c_s * M @ u_n + h * R @ tg
        self.rhs_B = M @ (p.tau * prob.phi_n + h * self.G @ prob.mu_n + self.G @ prob.phi_n)

    def Ln(self, theta):
        vals = [_rho_ref(self.p.eps, x) for x in theta]
        big = np.array([self.p.eps * x + y for x, (_, y) in zip(theta, vals)])
        slope = np.array([self.p.eps + 1.0 / (rho + self.p.eps) for rho, _ in vals])
        return big, slope

    def beta(self, phi):
        pairs = [_yosida_and_slope(self.g, self.p.eps, x) for x in phi]
        return np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])

    def residual(self, z, need_jac=True):
        p, h, n = self.p, self.prob.h, self.n
        theta, phi = z[:n], z[n:]
        big, slope = self.Ln(theta)
        b, db = self.beta(phi)
        sig = p.theta_a - 2.0 * p.theta_b * phi
        D = np.diag(self.lam1)
        F_A = (p.c_s * self.M @ big + p.eta * h * self.K @ theta + h * self.R @ theta
               - self.rhs_A - self.M @ D @ (self.prob.phi_n - phi))
        F_B = (p.tau * self.M @ phi + self.M @ self.G @ phi + p.gamma * h * self.K @ phi
               + h * self.M @ (b + sig) - self.rhs_B - h * self.M @ D @ theta)
        F = np.concatenate([F_A, F_B])
        if not need_jac:
            return F, None
        J = np.zeros((2 * n, 2 * n))
        J[:n, :n] = p.c_s * self.M @ np.diag(slope) + p.eta * h * self.K + h * self.R
        J[:n, n:] = self.M @ D
        J[n:, :n] = -h * self.M @ D
        J[n:, n:] = (p.tau * self.M + self.M @ self.G + p.gamma * h * self.K
                     + h * self.M @ np.diag(db - 2.0 * p.theta_b))
        return F, J

    def nodal(self, F):
        return np.concatenate([F[: self.n] / self.mass, F[self.n:] / self.mass])


def dense_step_solve(prob, tol=1e-13, maxit=100):
    """Solve the coupled step monolithically; returns a :class:`DenseSolution`."""
    d = _Dense(prob)
    n = d.n
    z = np.concatenate([prob.theta_n, prob.phi_n])
    damped = 0
    scale = max(1.0, float(np.max(np.abs(d.nodal(np.concatenate([d.rhs_A, d.rhs_B]))))))
    for it in range(maxit):
        F, J = d.residual(z)
        res = float(np.max(np.abs(d.nodal(F))))
        if res <= tol * scale:
            break
        dz = np.linalg.solve(J, -F)
        merit = float(np.sum(d.nodal(F) * F))
        t = 1.0
        while True:
            F_new, _ = d.residual(z + t * dz, need_jac=False)
            if float(np.sum(d.nodal(F_new) * F_new)) <= (1 - 1e-4 * t) * merit:
                break
            t *= 0.5
            if t < 1e-12:
                # at roundoff level a full step is harmless
                if res <= 1e3 * tol * scale:
                    t = 1.0
                    break
                raise OracleError(f"dense Newton line search failed at residual {res:.3e}")
        if t < 1.0:
            damped += 1
        z = z + t * dz
    else:
        raise OracleError(f"dense Newton did not converge (residual {res:.3e})")
    theta, phi = z[:n], z[n:]
    mu = d.G @ prob.mu_n + d.G @ (prob.phi_n - phi) / prob.h
    return DenseSolution(theta, phi, mu, it, damped, res)


def dense_solve_A(prob, phi_trial):
    """Dense solve of the temperature equation alone for a fixed phase."""
    d = _Dense(prob)
    n = d.n
    theta = prob.theta_n.copy()
    for _ in range(100):
        z = np.concatenate([theta, phi_trial])
        F, J = d.residual(z)
        FA = F[:n]
        if np.max(np.abs(FA / d.mass)) <= 1e-13:
            return theta
        theta = theta + np.linalg.solve(J[:n, :n], -FA)
    raise OracleError("dense A solve did not converge")


def dense_solve_B(prob, theta_input):
    """Dense solve of the phase equation alone for a fixed temperature."""
    d = _Dense(prob)
    n = d.n
    phi = prob.phi_n.copy()
    for _ in range(100):
        z = np.concatenate([theta_input, phi])
        F, J = d.residual(z)
        FB = F[n:]
        if np.max(np.abs(FB / d.mass)) <= 1e-13:
            return phi
        phi = phi + np.linalg.solve(J[n:, n:], -FB)
    raise OracleError("dense B solve did not converge")


def dense_green(n_cells, length, g):
    """Dense ``(M + K)^{-1} M g``."""
    M, K, _ = dense_matrices(n_cells, length, (0.0, 0.0))
    return np.linalg.solve(M + K, M @ np.asarray(g, dtype=float))


def dense_zero_mean_green(n_cells, length, v):
    """Dense ``N v`` via a Lagrange multiplier for the zero-mean constraint."""
    M, K, _ = dense_matrices(n_cells, length, (0.0, 0.0))
    n = M.shape[0]
    m = np.diag(M)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = K
    A[:n, n] = m
    A[n, :n] = m
    rhs = np.concatenate([M @ np.asarray(v, dtype=float), [0.0]])
    return np.linalg.solve(A, rhs)[:n]


# ---------------------------------------------------------------------------
# random case generation


def random_case(rng, graph, n_cells=2):
    """A random admissible single-step problem on ``n_cells + 1`` nodes.

    Returns ``(problem, state, dense_problem)`` where the first two drive
    the production stepper and the last drives the dense oracle.
    """
    from .discretization import Mesh
    from .graphs import LatentHeat
    from .model import BoundaryAndData, Constant, PhysParams, Source, State
    from . import graphs
    from .stepper import SAFETY, Problem, step_guard

    graph = GraphSpec.parse(graph)
    p = PhysParams(
        c_s=rng.uniform(0.5, 2.0), eta=rng.uniform(0.5, 2.0), gamma=rng.uniform(0.5, 2.0),
        tau=rng.uniform(0.5, 2.0), eps=rng.uniform(0.2, 1.0), graph=graph,
        latent=LatentHeat(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
        theta_a=rng.uniform(-0.5, 0.5), theta_b=rng.uniform(0.1, 1.0),
    )
    length = rng.uniform(0.5, 2.0)
    robin = (rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))
    m = Mesh(n_cells, length, robin)
    n = m.n_nodes
    h = SAFETY * step_guard(p) * rng.uniform(0.5, 1.0)
    theta_n = rng.uniform(0.5, 2.0, n)
    phi_n = rng.uniform(-0.9, 0.9, n)
    mu_n = rng.uniform(-1.0, 1.0, n)
    f_val = rng.uniform(-1.0, 1.0)
    tg = (rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))
    data = BoundaryAndData(theta0=theta_n, phi0=phi_n, mu0=mu_n,
                           theta_gamma=(Constant(tg[0]), Constant(tg[1])),
                           source=Source(Constant(f_val), 0),
                           theta_bounds=(0.5, 2.0), alpha_bounds=(0.5, 2.0))
    problem = Problem(p, data, m, h, 1)
    state = State(0, 0.0, theta_n.copy(), phi_n.copy(), mu_n.copy(), graphs.Ln_eps(p.eps, theta_n))
    dense = DenseStepProblem(p, n_cells, length, robin, h, theta_n, phi_n, mu_n,
                             np.full(n, f_val), tg)
    return problem, state, dense


def compare_case(rng, graph, n_cells=2):
    """Run one random case through both routes; returns a dict of differences."""
    from .stepper import advance

    problem, state, dense = random_case(rng, graph, n_cells)
    new, report = advance(problem, state)
    ref = dense_step_solve(dense)
    return {
        "graph": GraphSpec.parse(graph).value,
        "theta": float(np.max(np.abs(new.theta - ref.theta))),
        "phi": float(np.max(np.abs(new.phi - ref.phi))),
        "mu": float(np.max(np.abs(new.mu - ref.mu))),
        "damped": ref.damped_steps,
        "fp_iterations": report.fp_iterations,
    }
