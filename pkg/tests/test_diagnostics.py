import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import preset_problem
from entroflow import diagnostics, stepper
from entroflow.discretization import Mesh
from entroflow.graphs import GraphSpec, LatentHeat
from entroflow.model import PhysParams


def _params(graph="regular", **kw):
    base = dict(c_s=1.5, eta=1.0, gamma=0.3, tau=0.5, eps=0.2, graph=graph,
                latent=LatentHeat(1.0, -1.0), theta_a=0.1, theta_b=0.5)
    base.update(kw)
    return PhysParams(**base)


def test_conserved_total():
    m = Mesh(16, 2.0, (1.0, 1.0))
    assert diagnostics.conserved_total(m, np.full(17, 0.3), np.zeros(17), 0.1) == pytest.approx(0.3)
    rng = np.random.default_rng(0)
    m3 = Mesh(2, 1.5, (1.0, 1.0))
    phi, mu = rng.standard_normal(3), rng.standard_normal(3)
    h = 0.01
    # lumped weights are dx/2, dx, dx/2
    w = np.array([0.375, 0.75, 0.375])
    ref = sum(w[i] * (phi[i] + h * mu[i]) for i in range(3)) / 1.5
    assert diagnostics.conserved_total(m3, phi, mu, h) == pytest.approx(ref, abs=1e-16)


def test_relative_drift():
    assert diagnostics.relative_drift([]) == 0.0
    assert diagnostics.relative_drift([2.0, 2.0, 2.0]) == 0.0
    assert diagnostics.relative_drift([0.1, 0.1 + 1e-12]) == pytest.approx(1e-12)
    assert diagnostics.relative_drift([4.0, 5.0]) == pytest.approx(0.25)


vec = arrays(np.float64, 9, elements=st.floats(-3, 3))


@pytest.mark.parametrize("g", list(GraphSpec))
def test_subgradient_trivial(g):
    m = Mesh(8, 1.0, (1.0, 1.0))
    phi = np.linspace(-0.5, 0.5, 9)
    assert diagnostics.check_subgradient_step(g, 0.1, phi, phi, m) == 0.0


@settings(max_examples=100, deadline=None)
@given(g=st.sampled_from(list(GraphSpec)), eps=st.floats(0.01, 1.0), a=vec, b=vec)
def test_subgradient_random(g, eps, a, b):
    m = Mesh(8, 1.0, (1.0, 1.0))
    assert diagnostics.check_subgradient_step(g, eps, a, b, m) >= -1e-9


def test_temperature_trivial():
    m = Mesh(8, 1.0, (1.0, 1.0))
    th = np.linspace(0.5, 2.0, 9)
    p = _params()
    assert diagnostics.check_temperature_step(m, p, th, th) == pytest.approx(0.0, abs=1e-14)
    rec = diagnostics.temperature_record(m, p, th, th)
    assert rec.rho_int[0] > 0


@settings(max_examples=100, deadline=None)
@given(eps=st.floats(0.01, 1.0),
       a=arrays(np.float64, 9, elements=st.floats(0.01, 10)),
       b=arrays(np.float64, 9, elements=st.floats(0.01, 10)))
def test_temperature_random(eps, a, b):
    m = Mesh(8, 1.0, (1.0, 1.0))
    p = _params(eps=eps)
    rec = diagnostics.temperature_record(m, p, a, b)
    scale = 1 + abs(rec.lhs) + abs(rec.bound)
    assert rec.slack >= -1e-12 * scale


def test_temperature_large_contrast():
    m = Mesh(8, 1.0, (1.0, 1.0))
    p = _params(eps=0.01)
    lo = np.full(9, 1e-2)
    hi = np.full(9, 10.0)
    hi[::2] = 1e-2 * 1e3
    for a, b in ((lo, hi), (hi, lo)):
        rec = diagnostics.temperature_record(m, p, a, b)
        assert math.isfinite(rec.slack) and rec.slack >= 0.0


def test_energy_record_stationary_step():
    m = Mesh(8, 1.0, (1.0, 1.0))
    p = _params()
    phi = np.full(9, 0.2)
    mu = np.full(9, 0.7)
    rec = diagnostics.energy_record(m, p, phi, phi, mu, mu, np.ones(9), 0.01)
    for k in ("dual", "viscous", "grad_increment", "grad_jump", "envelope_increment",
              "mu_increment", "mu_jump", "coupling"):
        assert getattr(rec, k) == pytest.approx(0.0, abs=1e-15)
    assert rec.slack == pytest.approx(rec.source_bound)
    assert rec.slack >= 0


def test_energy_slack_on_solver_output():
    prob = preset_problem("smooth-regular", mesh__n_cells=16, time__N=3, time__T=0.0075)
    a = stepper.run(prob)
    b = stepper.run(prob)
    assert [r.slack_a15 for r in a.reports] == [r.slack_a15 for r in b.reports]
    m, p, h = prob.mesh, prob.params, prob.h
    for s0, s1 in zip(a.states[:-1], a.states[1:]):
        assert diagnostics.check_energy_step(m, p, s0.phi, s1.phi, s0.mu, s1.mu, s1.theta, h) >= -1e-9
        lhs, rhs, scale = diagnostics.energy_identity_defect(m, p, s0.phi, s1.phi, s0.mu, s1.mu,
                                                            s1.theta, h)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, scale)


def test_energy_telescoping():
    prob = preset_problem("smooth-indicator", time__N=10, time__T=0.025)
    traj = stepper.run(prob)
    m, p, h = prob.mesh, prob.params, prob.h
    energies = [diagnostics.energy(m, p, s.phi, s.mu, h) for s in traj.states]
    incs = [r.energy_increment for r in traj.reports]
    assert diagnostics.energy_telescoping_defect(energies, incs) <= 1e-12


def test_bound_tracker_stationary():
    traj = stepper.run(preset_problem("stationary"))
    b = diagnostics.bound_tracker(traj)
    assert set(b) == set(diagnostics.BOUND_NAMES)
    for k in ("tau_dphi_L2H", "dphi_L2Vstar", "dlntheta_L2Vstar", "dlambda_L2Vstar"):
        assert b[k] == pytest.approx(0.0, abs=1e-24)
    assert all(v >= 0 for v in b.values())


def test_bound_tracker_mesh_refinement():
    coarse = stepper.run(preset_problem("smooth-regular", mesh__n_cells=32, time__N=20, time__T=0.05))
    fine = stepper.run(preset_problem("smooth-regular", mesh__n_cells=64, time__N=20, time__T=0.05))
    bc, bf = diagnostics.bound_tracker(coarse), diagnostics.bound_tracker(fine)
    for k in ("phi_LinfV", "theta_L2V", "mu_L2V", "lntheta_LinfH", "entropy_LinfH"):
        assert bc[k] == pytest.approx(bf[k], rel=0.05)
