import numpy as np
import pytest

from entroflow import config, presets
from entroflow.discretization import Mesh
from entroflow.graphs import LatentHeat
from entroflow.model import BoundaryAndData, Constant, PhysParams, Source
from entroflow.stepper import Problem


def preset_problem(name, **overrides):
    """Problem from a named preset with ``{dotted_key: str}`` overrides."""
    over = {k.replace("__", "."): str(v) for k, v in overrides.items()}
    return config.loads(presets.get(name), over).problem


def small_problem(graph="regular", n_cells=2, theta=1.0, phi=0.0, mu=0.0, theta_gamma=1.0,
                  source=0.0, t_final=None, n_steps=1, **param_changes):
    """A constant-data problem on a tiny mesh (``h`` defaults to a quarter of ``h0``)."""
    from entroflow.stepper import step_guard

    kw = dict(c_s=1.0, eta=1.0, gamma=1.0, tau=1.0, eps=0.5, graph=graph,
              latent=LatentHeat(1.0, -1.0), theta_a=0.0, theta_b=0.5)
    kw.update(param_changes)
    p = PhysParams(**kw)
    m = Mesh(n_cells, 1.0, (1.0, 1.0))
    n = m.n_nodes
    data = BoundaryAndData(theta0=np.full(n, theta), phi0=np.full(n, phi), mu0=np.full(n, mu),
                           theta_gamma=(Constant(theta_gamma), Constant(theta_gamma)),
                           source=Source(Constant(source), 0))
    if t_final is None:
        t_final = 0.25 * step_guard(p) * n_steps
    return Problem(p, data, m, t_final, n_steps)


def state_of(problem):
    from entroflow.model import initial_state
    return initial_state(problem.params, problem.data)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
