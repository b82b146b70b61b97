"""Conserved quantities, energies and per-step inequality checks.

Every ``check_*`` function returns a *slack*: the amount by which an
inequality holds (``>= 0`` means it holds).  Slacks are compared against
``-SLACK_TOL`` to allow for roundoff.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import graphs
from .discretization import dual_norm_V, dual_norm_V0

SLACK_TOL = 1e-9
RESIDUAL_TOL = 1e-10
IDENTITY_TOL = 1e-9
CONSERVATION_TOL = 1e-10


def conserved_total(m, phi, mu, h):
    """Mean of ``phi + h*mu``; constant in time along the scheme."""
    return float(np.dot(m.lumped_mass, phi + h * mu)) / m.length


def relative_drift(values):
    """``max |c_n - c_0| / max(|c_0|, 1)`` over a sequence of totals."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values - values[0])) / max(abs(values[0]), 1.0))


def energy(m, params, phi, mu, h):
    """``(gamma/2)|grad phi|^2 + int betahat_eps(phi) + (h/2)|mu|^2``."""
    grad2 = m.seminorm_grad(phi) ** 2
    env = float(np.dot(m.lumped_mass, graphs.moreau(params.graph, params.eps, phi)))
    return 0.5 * params.gamma * grad2 + env + 0.5 * h * m.inner(mu, mu)


# ---------------------------------------------------------------------------
# per-step inequalities


def check_subgradient_step(g, eps, phi_new, phi_old, m):
    """Convexity of the envelope: ``(beta_eps(new), new-old) >= int(bh(new) - bh(old))``."""
    lhs = m.inner(graphs.yosida(g, eps, phi_new), phi_new - phi_old)
    increment = float(np.dot(m.lumped_mass,
                             graphs.moreau(g, eps, phi_new) - graphs.moreau(g, eps, phi_old)))
    return lhs - increment


@dataclass
class EnergyRecord:
    """Terms of the discrete energy inequality for one step."""

    dual: float          # (h/2) |dphi/h + dmu|^2 in V0*
    viscous: float       # tau h |dphi/h|^2
    grad_increment: float  # (gamma/2)(|grad phi1|^2 - |grad phi0|^2)
    grad_jump: float       # (gamma/2)|grad(phi1 - phi0)|^2
    envelope_increment: float
    mu_increment: float  # (h/2)(|mu1|^2 - |mu0|^2)
    mu_jump: float       # (h/4)|mu1 - mu0|^2
    source_bound: float  # 2|s''|^2 h |phi1|_V^2 + 2|s'(0)|^2 L h
    coupling: float      # int lambda'(phi0)(phi1 - phi0) theta1

    @property
    def lhs(self):
        return (self.dual + self.viscous + self.grad_increment + self.grad_jump
                + self.envelope_increment
                + self.mu_increment + self.mu_jump)

    @property
    def rhs(self):
        return self.source_bound + self.coupling

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def energy_increment(self):
        """``E_{n+1} - E_n`` assembled from the step terms."""
        return self.grad_increment + self.envelope_increment + self.mu_increment


def _step_combination(m, phi0, phi1, mu0, mu1, h):
    v = (phi1 - phi0) / h + (mu1 - mu0)
    # remove the roundoff-level mean so the zero-mean inverse applies
    return v - m.mean(v)


def energy_record(m, params, phi0, phi1, mu0, mu1, theta1, h):
    dphi = phi1 - phi0
    dmu = mu1 - mu0
    v = _step_combination(m, phi0, phi1, mu0, mu1, h)
    g = params.gamma
    s2 = params.sigma_second_sup
    env = graphs.moreau(params.graph, params.eps, phi1) - graphs.moreau(params.graph, params.eps, phi0)
    return EnergyRecord(
        dual=0.5 * h * dual_norm_V0(m, v) ** 2,
        viscous=params.tau * m.inner(dphi, dphi) / h,
        grad_increment=0.5 * g * (m.seminorm_grad(phi1) ** 2 - m.seminorm_grad(phi0) ** 2),
        grad_jump=0.5 * g * m.seminorm_grad(dphi) ** 2,
        envelope_increment=float(np.dot(m.lumped_mass, env)),
        mu_increment=0.5 * h * (m.inner(mu1, mu1) - m.inner(mu0, mu0)),
        mu_jump=0.25 * h * m.inner(dmu, dmu),
        source_bound=(2.0 * s2 * s2 * h * m.norm_V(phi1) ** 2
                      + 2.0 * params.sigma_prime(0.0) ** 2 * m.length * h),
        coupling=m.inner(params.lam_prime(phi0) * dphi, theta1),
    )


def check_energy_step(m, params, phi0, phi1, mu0, mu1, theta1, h):
    """Slack ``RHS - LHS`` of the per-step energy inequality."""
    return energy_record(m, params, phi0, phi1, mu0, mu1, theta1, h).slack


def energy_identity_defect(m, params, phi0, phi1, mu0, mu1, theta1, h):
    """Both sides of the exact per-step energy identity.

    Returns ``(lhs, rhs, scale)`` where ``scale`` is the sum of the absolute
    values of all terms; a correct step has ``|lhs - rhs| <= tol * max(1, scale)``.
    """
    dphi = phi1 - phi0
    v = _step_combination(m, phi0, phi1, mu0, mu1, h)
    terms_l = [
        h * dual_norm_V0(m, v) ** 2,
        params.tau * m.inner(dphi, dphi) / h,
        params.gamma * float(np.dot(m.K(phi1), dphi)),
        m.inner(graphs.yosida(params.graph, params.eps, phi1), dphi),
        h * m.inner(mu1 - mu0, mu1),
    ]
    terms_r = [
        -m.inner(params.sigma_prime(phi1), dphi),
        m.inner(params.lam_prime(phi0) * dphi, theta1),
    ]
    scale = sum(abs(t) for t in terms_l + terms_r)
    return math.fsum(terms_l), math.fsum(terms_r), scale


@dataclass
class TemperatureRecord:
    """Terms of the temperature convexity inequality for one step."""

    lhs: float           # c_s (theta1, Ln(theta1) - Ln(theta0))
    theta_sq: tuple      # (c_s eps/2)|theta|^2 at (n, n+1)
    theta_jump: float
    log_sq: tuple        # (c_s eps/2)|ln_eps theta|^2 at (n, n+1)
    log_jump: float
    rho_int: tuple       # c_s int rho_eps(theta) at (n, n+1)

    @property
    def bound(self):
        return (self.theta_sq[1] - self.theta_sq[0] + self.theta_jump
                + self.log_sq[1] - self.log_sq[0] + self.log_jump
                + self.rho_int[1] - self.rho_int[0])

    @property
    def slack(self):
        return self.lhs - self.bound


def temperature_record(m, params, theta0, theta1):
    c, eps = params.c_s, params.eps
    rho0, rho1 = graphs.rho(eps, theta0), graphs.rho(eps, theta1)
    l0, l1 = graphs.ln_eps(eps, theta0), graphs.ln_eps(eps, theta1)
    big0, big1 = eps * theta0 + l0, eps * theta1 + l1
    k = 0.5 * c * eps
    return TemperatureRecord(
        lhs=c * m.inner(theta1, big1 - big0),
        theta_sq=(k * m.inner(theta0, theta0), k * m.inner(theta1, theta1)),
        theta_jump=k * m.inner(theta1 - theta0, theta1 - theta0),
        log_sq=(k * m.inner(l0, l0), k * m.inner(l1, l1)),
        log_jump=k * m.inner(l1 - l0, l1 - l0),
        rho_int=(c * float(np.dot(m.lumped_mass, rho0)), c * float(np.dot(m.lumped_mass, rho1))),
    )


def check_temperature_step(m, params, theta0, theta1):
    """Slack of the lower bound for ``c_s (theta1, Ln theta1 - Ln theta0)``."""
    return temperature_record(m, params, theta0, theta1).slack


def energy_telescoping_defect(energies, increments):
    """Relative mismatch between ``sum(increments)`` and ``E_m - E_0``."""
    total = math.fsum(increments)
    diff = energies[-1] - energies[0]
    scale = max(abs(energies[0]), abs(energies[-1]), math.fsum(abs(x) for x in increments), 1e-300)
    return abs(total - diff) / scale


# ---------------------------------------------------------------------------
# a priori bound tracking

#: rows whose bound may grow like ``1 + 1/tau``
WEIGHTED_BOUNDS = ("dlntheta_L2Vstar", "dlambda_L2Vstar")

BOUND_NAMES = (
    "tau_dphi_L2H", "phi_LinfV", "theta_L2V",
    "dphi_L2Vstar", "mu_L2V", "xi_L2H", "phi_L2W",
    "entropy_LinfH", "entropy_H1Vstar",
    "lntheta_LinfH", "lambda_LinfH",
) + WEIGHTED_BOUNDS


def bound_tracker(traj):
    """Discrete analogues of the uniform a priori bounds, as squared norms.

    Time integrals use the step sizes of the trajectory (right-endpoint
    values for the piecewise-constant interpolants, difference quotients
    for time derivatives); ``Linf`` rows take the maximum over all levels.
    The logarithmic temperature is represented by ``u = Ln_eps(theta)``.
    """
    p = traj.problem.params
    m = traj.problem.mesh
    states = traj.states
    out = dict.fromkeys(BOUND_NAMES, 0.0)
    if not states:
        return out

    def entropy(s):
        return p.c_s * s.u + p.lam(s.phi)

    for s in states:
        out["phi_LinfV"] = max(out["phi_LinfV"], m.norm_V(s.phi) ** 2)
        out["entropy_LinfH"] = max(out["entropy_LinfH"], m.inner(entropy(s), entropy(s)))
        out["lntheta_LinfH"] = max(out["lntheta_LinfH"], m.inner(s.u, s.u))
        lam = p.lam(s.phi)
        out["lambda_LinfH"] = max(out["lambda_LinfH"], m.inner(lam, lam))
    for s0, s1 in zip(states[:-1], states[1:]):
        h = s1.t - s0.t
        dphi = (s1.phi - s0.phi) / h
        xi = graphs.yosida(p.graph, p.eps, s1.phi)
        w0, w1 = entropy(s0), entropy(s1)
        out["tau_dphi_L2H"] += p.tau * h * m.inner(dphi, dphi)
        out["theta_L2V"] += h * m.norm_V(s1.theta) ** 2
        out["dphi_L2Vstar"] += h * dual_norm_V(m, dphi) ** 2
        out["mu_L2V"] += h * m.norm_V(s1.mu) ** 2
        out["xi_L2H"] += h * m.inner(xi, xi)
        out["phi_L2W"] += h * m.norm_W(s1.phi) ** 2
        out["entropy_H1Vstar"] += h * (dual_norm_V(m, w1) ** 2 + dual_norm_V(m, (w1 - w0) / h) ** 2)
        out["dlntheta_L2Vstar"] += h * dual_norm_V(m, (s1.u - s0.u) / h) ** 2
        out["dlambda_L2Vstar"] += h * dual_norm_V(m, (p.lam(s1.phi) - p.lam(s0.phi)) / h) ** 2
    return out
