"""Implicit time stepping by the contraction fixed point ``S = B o A``.

One step from level ``n`` to ``n+1`` solves

* ``A``: the temperature equation for ``theta`` given a trial phase,
* ``B``: the phase equation for ``phi`` given a temperature,

iterates ``phi <- B(A(phi))`` to its fixed point, sets ``theta = A(phi)``
and reconstructs the chemical potential from the conserved law.  All
equations are assembled with the lumped mass ``M``, the stiffness ``K`` and
the Robin matrix ``R`` of :mod:`entroflow.discretization`; the nonlinear
terms act nodewise.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import diagnostics, graphs
from ._backend import kernels
from .discretization import neumann_green, tridiag_matvec
from .errors import ConfigError, InvariantViolation, PreconditionError, StepFailure
from .model import State, initial_state

log = logging.getLogger(__name__)

SAFETY = 0.5
NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
FP_TOL = 1e-11
FP_MAXIT = 200
CG_RTOL = 1e-13
CG_MAXIT = 500
RETRY_DEPTH = 5
#: ratios whose denominator is below this (relative to |phi_n|_M) are noise
RATIO_FLOOR = 1e-9


# ---------------------------------------------------------------------------
# step-size guard


def guard_entries(p):
    """Named entries of the step-size bound; zero-denominator entries are dropped."""
    if not p.tau > 0:
        raise PreconditionError("the scheme needs tau > 0")
    s2 = p.sigma_second_sup
    lam = p.lam_prime_sup
    entries = {"unit": 1.0}
    if s2 > 0:
        entries["viscosity"] = p.tau / (2.0 * s2)
        entries["interface"] = p.gamma / (8.0 * s2 * s2)
    if lam > 0:
        entries["latent_heat"] = p.c_s * p.eps * p.tau / (2.0 * lam * lam)
    return entries


_GUARD_FORMULAS = {
    "unit": "1",
    "viscosity": "tau/(2*sup|sigma''|)",
    "latent_heat": "c_s*eps*tau/(2*sup|lambda_eps'|^2)",
    "interface": "gamma/(8*sup|sigma''|^2)",
}


def step_guard(p):
    """Largest admissible step ``h0``; the stepper uses ``h <= SAFETY*h0``."""
    return min(guard_entries(p).values())


def contraction_bound(p, h):
    """Proven Lipschitz constant of ``S`` in the ``M``-norm."""
    lam = p.lam_prime_sup
    return 2.0 * lam * lam * h / (p.c_s * p.eps * p.tau)


# ---------------------------------------------------------------------------
# problem definition


@dataclass
class Problem:
    """Everything that defines a run: coefficients, data, mesh and time grid."""

    params: object
    data: object
    mesh: object
    t_final: float
    n_steps: int

    @property
    def h(self):
        return self.t_final / self.n_steps

    def validate(self):
        """Fail fast on inadmissible data or step size (raises ``ConfigError``)."""
        if not (self.t_final > 0 and self.n_steps >= 1):
            raise ConfigError(f"need T > 0 and N >= 1, got T={self.t_final}, N={self.n_steps}")
        self.data.validate(self.mesh, self.params.graph, self.t_final)
        try:
            entries = guard_entries(self.params)
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from None
        h = self.h
        limit = SAFETY * min(entries.values())
        # relative slack so that T and h = T/N written in decimal still pass
        if h > limit * (1.0 + 1e-12):
            bad = [f"{k} = {_GUARD_FORMULAS[k]} = {v:.6g}"
                   for k, v in entries.items() if h > SAFETY * v * (1.0 + 1e-12)]
            raise ConfigError(
                f"step h = T/N = {h:.6g} exceeds {SAFETY}*h0 = {limit:.6g}; "
                f"violated guard entries: {'; '.join(bad)}")
        return self


# ---------------------------------------------------------------------------
# per-step data


class StepData:
    """Quantities frozen during one step from ``state`` over ``(t, t + h)``."""

    def __init__(self, problem, state, h):
        p, m, d = problem.params, problem.mesh, problem.data
        self.problem = problem
        self.state = state
        self.h = h
        t0, t1 = state.t, state.t + h
        self.lam_prime = p.lam_prime(state.phi)
        self.f = d.source.average(m, t0, t1)
        g_left, g_right = d.theta_gamma_average(t0, t1)
        gamma_vals = np.zeros(m.n_nodes)
        gamma_vals[0], gamma_vals[-1] = g_left, g_right
        self.theta_gamma = gamma_vals
        mass = m.lumped_mass
        # right-hand side of A without the phase-dependent latent term
        self.rhs_A = h * mass * self.f + p.c_s * mass * state.u + h * m.robin_diag * gamma_vals
        self.g_mu = neumann_green(m, state.mu)
        self.g_phi = neumann_green(m, state.phi)
        self.rhs_B = mass * (p.tau * state.phi + h * self.g_mu + self.g_phi)
        self.scale_A = max(1.0, float(np.max(np.abs(self.rhs_A / mass))))
        self.scale_B = max(1.0, float(np.max(np.abs(self.rhs_B / mass))))
        lower, diag, upper = m.stiffness
        self.jac_A_lower = p.eta * h * lower
        self.jac_A_upper = p.eta * h * upper
        self.jac_A_diag = p.eta * h * diag + h * m.robin_diag


@dataclass
class NewtonInfo:
    iterations: int = 0
    residual: float = math.nan
    damped: int = 0
    cg_iterations: int = 0


def _newton(residual, direction, x, scale, mass, what):
    """Damped Newton on ``F(x) = 0`` with merit ``sum F^2 / M``.

    ``residual(x)`` returns ``F``; ``direction(x, F)`` returns the Newton
    step and the number of inner iterations it took.  Converges when the
    nodal residual ``max |F/M|`` is at most ``NEWTON_TOL * scale``; one
    further full step is then taken if it lowers the residual.
    """
    info = NewtonInfo()
    F = residual(x)
    res = float(np.max(np.abs(F / mass)))
    merit = float(np.sum(F * F / mass))
    tol = NEWTON_TOL * scale
    for it in range(NEWTON_MAXIT + 1):
        if res <= tol:
            dx, inner = direction(x, F)
            info.cg_iterations += inner
            x_new = x + dx
            F_new = residual(x_new)
            res_new = float(np.max(np.abs(F_new / mass)))
            if res_new < res:
                x, res = x_new, res_new
            info.iterations = it
            info.residual = res
            return x, info
        if it == NEWTON_MAXIT:
            break
        dx, inner = direction(x, F)
        info.cg_iterations += inner
        t = 1.0
        while True:
            x_new = x + t * dx
            F_new = residual(x_new)
            merit_new = float(np.sum(F_new * F_new / mass))
            if np.isfinite(merit_new) and merit_new <= (1.0 - 1e-4 * t) * merit:
                break
            t *= 0.5
            if t < 2.0 ** -40:
                raise StepFailure(f"{what}: line search failed at residual {res:.3e}")
        if t < 1.0:
            info.damped += 1
        x, F, merit = x_new, F_new, merit_new
        res = float(np.max(np.abs(F / mass)))
    raise StepFailure(f"{what}: Newton did not converge in {NEWTON_MAXIT} iterations "
                      f"(residual {res:.3e})")


# ---------------------------------------------------------------------------
# operator A: temperature


def residual_A(sd, theta, phi_trial):
    """Assembled residual of the temperature equation."""
    p, m = sd.problem.params, sd.problem.mesh
    big = graphs.Ln_eps(p.eps, theta)
    latent = m.lumped_mass * sd.lam_prime * (sd.state.phi - phi_trial)
    return (p.c_s * m.lumped_mass * big + p.eta * sd.h * m.K(theta)
            + sd.h * m.robin_diag * theta - sd.rhs_A - latent)


def solve_A(sd, phi_trial, theta_guess=None):
    """Temperature ``theta`` for the trial phase ``phi_trial``; returns ``(theta, NewtonInfo)``."""
    p, m = sd.problem.params, sd.problem.mesh
    mass = m.lumped_mass
    latent = mass * sd.lam_prime * (sd.state.phi - phi_trial)
    rhs = sd.rhs_A + latent
    kd = sd.jac_A_diag

    def residual(theta):
        big = graphs.Ln_eps(p.eps, theta)
        return p.c_s * mass * big + p.eta * sd.h * m.K(theta) + sd.h * m.robin_diag * theta - rhs

    def direction(theta, F):
        _, slope = graphs.Ln_eps_with_prime(p.eps, theta)
        diag = kd + p.c_s * mass * slope
        return kernels.tridiag_solve(sd.jac_A_lower, diag, sd.jac_A_upper, -F), 0

    x0 = sd.state.theta if theta_guess is None else theta_guess
    scale = max(sd.scale_A, float(np.max(np.abs(rhs / mass))))
    return _newton(residual, direction, np.array(x0, dtype=float), scale, mass, "solve_A")


# ---------------------------------------------------------------------------
# operator B: phase


def residual_B(sd, phi, theta_input):
    """Assembled residual of the phase equation."""
    p, m = sd.problem.params, sd.problem.mesh
    mass = m.lumped_mass
    h = sd.h
    nonlin = graphs.yosida(p.graph, p.eps, phi) + p.sigma_prime(phi)
    return (p.tau * mass * phi + mass * neumann_green(m, phi) + p.gamma * h * m.K(phi)
            + h * mass * nonlin - sd.rhs_B - h * mass * sd.lam_prime * theta_input)


def solve_B(sd, theta_input, phi_guess=None):
    """Phase ``phi`` for the temperature ``theta_input``; returns ``(phi, NewtonInfo)``.

    Newton steps are computed by preconditioned conjugate gradients on the
    symmetric positive definite Jacobian; the tridiagonal part of the
    Jacobian (everything except the Green-operator term) preconditions.
    """
    p, m = sd.problem.params, sd.problem.mesh
    mass = m.lumped_mass
    h = sd.h
    rhs = sd.rhs_B + h * mass * sd.lam_prime * theta_input
    lower, diag, upper = m.stiffness
    g_lower, g_diag, g_upper = p.gamma * h * lower, p.gamma * h * diag, p.gamma * h * upper
    n = m.n_nodes

    def residual(phi):
        nonlin = graphs.yosida(p.graph, p.eps, phi) + p.sigma_prime(phi)
        return (p.tau * mass * phi + mass * neumann_green(m, phi) + p.gamma * h * m.K(phi)
                + h * mass * nonlin - rhs)

    def direction(phi, F):
        local = mass * (p.tau + h * (graphs.yosida_prime(p.graph, p.eps, phi) + p.sigma_second))
        pd = g_diag + local

        def matvec(v):
            v = np.ravel(v)
            return tridiag_matvec(g_lower, pd, g_upper, v) + mass * neumann_green(m, v)

        def precond(v):
            return kernels.tridiag_solve(g_lower, pd, g_upper, np.ravel(v))

        count = [0]

        def tick(_):
            count[0] += 1

        op = LinearOperator((n, n), matvec=matvec, dtype=float)
        pre = LinearOperator((n, n), matvec=precond, dtype=float)
        dx, status = cg(op, -F, rtol=CG_RTOL, atol=0.0, maxiter=CG_MAXIT, M=pre, callback=tick)
        if status != 0:
            raise StepFailure(f"solve_B: conjugate gradients did not converge (status {status})")
        return dx, count[0]

    x0 = sd.state.phi if phi_guess is None else phi_guess
    scale = max(sd.scale_B, float(np.max(np.abs(rhs / mass))))
    return _newton(residual, direction, np.array(x0, dtype=float), scale, mass, "solve_B")


# ---------------------------------------------------------------------------
# fixed point and reconstruction


@dataclass
class FixedPointResult:
    theta: np.ndarray
    phi: np.ndarray
    iterations: int
    diffs: list
    ratios: list
    checked_ratios: list
    q_theory: float
    newton_A: NewtonInfo
    newton_B: NewtonInfo


def _accumulate(total, info):
    total.iterations += info.iterations
    total.damped += info.damped
    total.cg_iterations += info.cg_iterations
    total.residual = info.residual


def fixed_point_step(sd):
    """Iterate ``phi <- B(A(phi))`` from ``phi_n`` to the fixed point.

    Every contraction ratio from the third iterate on is compared with the
    proven bound; a violation raises ``InvariantViolation``.
    """
    p, m = sd.problem.params, sd.problem.mesh
    q = contraction_bound(p, sd.h)
    floor = RATIO_FLOOR * max(1.0, m.norm_H(sd.state.phi))
    phi = sd.state.phi.copy()
    theta = sd.state.theta.copy()
    stats_A, stats_B = NewtonInfo(), NewtonInfo()
    diffs, ratios, checked = [], [], []
    for k in range(FP_MAXIT):
        theta, info = solve_A(sd, phi, theta)
        _accumulate(stats_A, info)
        phi_new, info = solve_B(sd, theta, phi)
        _accumulate(stats_B, info)
        d = m.norm_H(phi_new - phi)
        diffs.append(d)
        if k >= 1 and diffs[-2] > floor:
            r = d / diffs[-2]
            ratios.append(r)
            if k >= 2:
                checked.append(r)
                if r > q * (1.0 + 1e-6):
                    raise InvariantViolation(
                        f"contraction: fixed-point ratio {r:.6g} exceeds the bound {q:.6g} "
                        f"at iteration {k + 1}")
        phi = phi_new
        if d <= FP_TOL:
            break
    else:
        raise StepFailure(f"fixed point did not converge in {FP_MAXIT} iterations (last diff {diffs[-1]:.3e})")
    theta, info = solve_A(sd, phi, theta)
    _accumulate(stats_A, info)
    return FixedPointResult(theta, phi, len(diffs), diffs, ratios, checked, q, stats_A, stats_B)


def reconstruct_mu(m, mu_n, phi_n, phi_new, h):
    """``mu_{n+1} = G mu_n + (1/h) G (phi_n - phi_{n+1})`` with ``G = (1 - Delta_h)^{-1}``."""
    return neumann_green(m, mu_n) + neumann_green(m, phi_n - phi_new) / h


def scheme_residuals(sd, theta, phi, mu):
    """Max-norm nodal residuals of the three step equations."""
    p, m = sd.problem.params, sd.problem.mesh
    mass = m.lumped_mass
    h = sd.h
    res_A = residual_A(sd, theta, phi) / mass
    # (phi1 - phi0)/h + (mu1 - mu0) - Delta_h mu1 = 0, multiplied by h
    res_mu = (phi - sd.state.phi + h * (mu - sd.state.mu)) + h * m.K(mu) / mass
    # mu1 = tau dphi - gamma Delta_h phi1 + beta_eps + sigma' - lambda' theta1, multiplied by h
    nonlin = graphs.yosida(p.graph, p.eps, phi) + p.sigma_prime(phi) - sd.lam_prime * theta
    res_B = h * mu - (p.tau * (phi - sd.state.phi) + p.gamma * h * m.K(phi) / mass + h * nonlin)
    return {
        "A": float(np.max(np.abs(res_A))) / sd.scale_A,
        "mu": float(np.max(np.abs(res_mu))) / max(1.0, float(np.max(np.abs(sd.state.phi)))),
        "B": float(np.max(np.abs(res_B))) / sd.scale_B,
    }


# ---------------------------------------------------------------------------
# one step and the time loop


@dataclass
class StepReport:
    """Telemetry and invariant values for one accepted step."""

    n: int
    t: float
    h: float
    fp_iterations: int
    ratios: list
    checked_ratios: list
    q_theory: float
    newton_A_iterations: int
    newton_A_residual: float
    newton_B_iterations: int
    newton_B_residual: float
    cg_iterations: int
    damped: int
    conserved_total: float
    energy: float
    energy_increment: float
    min_theta: float
    min_rho: float
    slack_a15: float
    slack_a2: float
    slack_a13: float
    identity_defect: float
    residuals: dict = field(default_factory=dict)
    substeps: int = 1

    @property
    def max_ratio(self):
        return max(self.checked_ratios) if self.checked_ratios else math.nan


def _single_step(problem, state, h):
    p, m = problem.params, problem.mesh
    sd = StepData(problem, state, h)
    fp = fixed_point_step(sd)
    mu = reconstruct_mu(m, state.mu, state.phi, fp.phi, h)
    u = graphs.Ln_eps(p.eps, fp.theta)
    new = State(state.n + 1, state.t + h, fp.theta, fp.phi, mu, u)
    rec = diagnostics.energy_record(m, p, state.phi, fp.phi, state.mu, mu, fp.theta, h)
    lhs, rhs, scale = diagnostics.energy_identity_defect(m, p, state.phi, fp.phi, state.mu, mu, fp.theta, h)
    report = StepReport(
        n=new.n, t=new.t, h=h,
        fp_iterations=fp.iterations, ratios=fp.ratios, checked_ratios=fp.checked_ratios,
        q_theory=fp.q_theory,
        newton_A_iterations=fp.newton_A.iterations, newton_A_residual=fp.newton_A.residual,
        newton_B_iterations=fp.newton_B.iterations, newton_B_residual=fp.newton_B.residual,
        cg_iterations=fp.newton_B.cg_iterations,
        damped=fp.newton_A.damped + fp.newton_B.damped,
        conserved_total=diagnostics.conserved_total(m, fp.phi, mu, h),
        energy=diagnostics.energy(m, p, fp.phi, mu, h),
        energy_increment=rec.energy_increment,
        min_theta=float(np.min(fp.theta)),
        min_rho=float(np.min(graphs.rho(p.eps, fp.theta))),
        slack_a15=rec.slack,
        slack_a2=diagnostics.check_temperature_step(m, p, state.theta, fp.theta),
        slack_a13=diagnostics.check_subgradient_step(p.graph, p.eps, fp.phi, state.phi, m),
        identity_defect=abs(lhs - rhs) / max(1.0, scale),
        residuals=scheme_residuals(sd, fp.theta, fp.phi, mu),
    )
    return new, report


def _merge(reports, h):
    last = reports[-1]
    merged = StepReport(
        n=last.n, t=last.t, h=h,
        fp_iterations=sum(r.fp_iterations for r in reports),
        ratios=[x for r in reports for x in r.ratios],
        checked_ratios=[x for r in reports for x in r.checked_ratios],
        q_theory=max(r.q_theory for r in reports),
        newton_A_iterations=sum(r.newton_A_iterations for r in reports),
        newton_A_residual=max(r.newton_A_residual for r in reports),
        newton_B_iterations=sum(r.newton_B_iterations for r in reports),
        newton_B_residual=max(r.newton_B_residual for r in reports),
        cg_iterations=sum(r.cg_iterations for r in reports),
        damped=sum(r.damped for r in reports),
        conserved_total=last.conserved_total,
        energy=last.energy,
        energy_increment=sum(r.energy_increment for r in reports),
        min_theta=min(r.min_theta for r in reports),
        min_rho=min(r.min_rho for r in reports),
        slack_a15=min(r.slack_a15 for r in reports),
        slack_a2=min(r.slack_a2 for r in reports),
        slack_a13=min(r.slack_a13 for r in reports),
        identity_defect=max(r.identity_defect for r in reports),
        residuals={k: max(r.residuals[k] for r in reports) for k in last.residuals},
        substeps=sum(r.substeps for r in reports),
    )
    return merged


def advance(problem, state, h=None, _depth=0):
    """One step of size ``h`` (default ``problem.h``); returns ``(state, StepReport)``.

    On ``StepFailure`` the interval is split into two half steps, recursively
    up to ``RETRY_DEPTH`` times, before the failure is propagated.
    """
    h = problem.h if h is None else h
    try:
        return _single_step(problem, state, h)
    except StepFailure as exc:
        if _depth >= RETRY_DEPTH:
            raise
        log.warning("step at t=%.6g failed (%s); retrying with h=%.6g", state.t, exc, h / 2)
    mid, r1 = advance(problem, state, h / 2, _depth + 1)
    new, r2 = advance(problem, mid, h / 2, _depth + 1)
    new.n = state.n + 1
    return new, _merge([r1, r2], h)


def check_report(report, slack_tol=None):
    """Raise ``InvariantViolation`` naming the first clause a step violates."""
    slack_tol = diagnostics.SLACK_TOL if slack_tol is None else slack_tol
    for name in ("slack_a15", "slack_a2", "slack_a13"):
        value = getattr(report, name)
        if not value >= -slack_tol:
            raise InvariantViolation(f"{name}: slack {value:.3e} below {-slack_tol:g} at step {report.n}")
    for name, value in report.residuals.items():
        if not value <= diagnostics.RESIDUAL_TOL:
            raise InvariantViolation(f"scheme residual {name}: {value:.3e} at step {report.n}")
    if not report.identity_defect <= diagnostics.IDENTITY_TOL:
        raise InvariantViolation(f"energy identity defect {report.identity_defect:.3e} at step {report.n}")
    if not report.min_rho > 0:
        raise InvariantViolation(f"positivity: min rho_eps(theta) = {report.min_rho:.3e} at step {report.n}")


@dataclass
class Trajectory:
    """States ``0..n`` of a run, per-step reports and failure information."""

    problem: Problem
    states: list
    reports: list
    failure: dict = None

    @property
    def completed(self):
        return self.failure is None and len(self.states) == self.problem.n_steps + 1

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    def stack(self, name):
        """Array of shape ``(levels, nodes)`` for ``theta``, ``phi``, ``mu`` or ``u``."""
        return np.array([getattr(s, name) for s in self.states])

    def conserved_totals(self):
        h = self.problem.h
        m = self.problem.mesh
        return [diagnostics.conserved_total(m, s.phi, s.mu, h) for s in self.states]


def run(problem, check=False, slack_tol=None, validate=True):
    """Run ``problem.n_steps`` steps from the initial data.

    Step failures that survive the retries end the run early; the returned
    trajectory then carries ``failure``.  With ``check=True`` every step
    report is checked and a violated invariant raises ``InvariantViolation``.
    """
    if validate:
        problem.validate()
    state = initial_state(problem.params, problem.data)
    states, reports = [state], []
    for n in range(problem.n_steps):
        try:
            state, report = advance(problem, state)
        except StepFailure as exc:
            return Trajectory(problem, states, reports,
                              failure={"step": n + 1, "t": state.t, "message": str(exc)})
        # pin the time grid to n*h to avoid accumulated rounding in t
        state.t = (n + 1) * problem.h
        report.t = state.t
        if check:
            check_report(report, slack_tol)
        states.append(state)
        reports.append(report)
    return Trajectory(problem, states, reports)
