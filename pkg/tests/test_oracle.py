import math

import numpy as np
import pytest

from conftest import small_problem, state_of
from entroflow import graphs, oracle
from entroflow.graphs import GraphSpec


def test_prox_bruteforce_values():
    assert oracle.prox_bruteforce("indicator", 0.5, 2.0) == pytest.approx(1.0, abs=1e-10)
    for g in GraphSpec:
        assert oracle.prox_bruteforce(g, 0.3, 0.0) == 0.0
    assert oracle.prox_bruteforce("regular", 1.0, 2.0) == pytest.approx(1.0, abs=1e-9)


def test_prox_bruteforce_agrees():
    rng = np.random.default_rng(99)
    for _ in range(60):
        g = rng.choice(list(GraphSpec))
        eps, r = rng.uniform(0.01, 1.0), rng.uniform(-5, 5)
        assert abs(oracle.prox_bruteforce(g, eps, r) - graphs.prox(g, eps, r)) <= 1e-8


def test_fd_check():
    assert oracle.fd_check(lambda x: 3.0, lambda x: 0.0, 0.7) == 0.0
    assert oracle.fd_check(lambda x: graphs.Ln_eps(0.1, x), lambda x: graphs.Ln_eps_prime(0.1, x), 1.0) <= 1e-6
    with pytest.raises(ValueError):
        oracle.fd_check(math.sin, math.cos, 0.0, side="up")


def test_dense_limits():
    p, _, d = oracle.random_case(np.random.default_rng(0), "regular")
    from dataclasses import replace
    with pytest.raises(oracle.OracleError):
        replace(d, n_cells=9)


@pytest.mark.parametrize("graph", ["regular", "logarithmic", "indicator"])
def test_dense_stationary(graph):
    prob = small_problem(graph, n_cells=4, theta=1.2, theta_gamma=1.2, phi=0.3, t_final=0.001)
    s = state_of(prob)
    from entroflow.model import equilibrium_mu
    mu = equilibrium_mu(prob.params, s.phi, s.theta)
    d = oracle.DenseStepProblem(prob.params, 4, 1.0, (1.0, 1.0), 0.001, s.theta, s.phi, mu,
                                np.zeros(5), (1.2, 1.2))
    sol = oracle.dense_step_solve(d)
    assert np.max(np.abs(sol.theta - 1.2)) <= 1e-13
    assert np.max(np.abs(sol.phi - 0.3)) <= 1e-13
    assert np.max(np.abs(sol.mu - mu)) <= 1e-12
    assert sol.damped_steps == 0


def test_dense_is_deterministic():
    a = oracle.compare_case(np.random.default_rng(5), "logarithmic")
    b = oracle.compare_case(np.random.default_rng(5), "logarithmic")
    assert a == b


def test_damping_monitor():
    rng = np.random.default_rng(6)
    damped = 0
    for g in ("regular", "logarithmic", "indicator"):
        for _ in range(10):
            damped += oracle.compare_case(rng, g)["damped"]
    assert damped == 0


def test_dense_jacobian_is_analytic():
    # the assembled Jacobian agrees with differences of the assembled residual
    prob, state, d = oracle.random_case(np.random.default_rng(8), "logarithmic", n_cells=3)
    dense = oracle._Dense(d)
    z = np.concatenate([d.theta_n, d.phi_n])
    F, J = dense.residual(z)
    step = 1e-7
    for j in range(len(z)):
        e = np.zeros_like(z)
        e[j] = step
        col = (dense.residual(z + e, need_jac=False)[0] - dense.residual(z - e, need_jac=False)[0]) / (2 * step)
        assert np.max(np.abs(col - J[:, j])) <= 1e-6 * max(1.0, np.max(np.abs(J[:, j])))
