import math

import numpy as np
import pytest

from conftest import preset_problem
from entroflow import continuation, diagnostics, stepper
from entroflow.errors import ConfigError


def test_schedule_values():
    prob = preset_problem("sweep-eps")
    sched = continuation.schedule(prob, "eps", 3)
    assert [v for v, _ in sched] == pytest.approx([0.1, 0.05, 0.025])
    assert all(p.h == prob.h for _, p in sched)
    sched = continuation.schedule(prob, "h", 3)
    assert [p.n_steps for _, p in sched] == [200, 400, 800]


def test_schedule_fails_fast():
    prob = preset_problem("stationary")
    with pytest.raises(ConfigError, match="eps = 0.05"):
        continuation.schedule(prob, "eps", 2)
    with pytest.raises(ConfigError):
        continuation.schedule(prob, "h", 1)
    with pytest.raises(ConfigError):
        continuation.schedule(prob, "gamma", 2)


def test_stationary_sweep_has_zero_differences():
    prob = preset_problem("stationary", time__N=10, time__T=0.05)
    table = continuation.continuation(prob, "h", 3)
    assert not table.failed
    for d in table.differences:
        assert d.l2 <= 1e-12 and d.c_vstar <= 1e-12 and d.l2_mu <= 1e-12


def test_difference_of_identical_runs():
    prob = preset_problem("smooth-regular", mesh__n_cells=16, time__N=5, time__T=0.0125)
    a = stepper.run(prob)
    assert continuation.l2_difference(prob.mesh, a, a) == 0.0
    assert continuation.cvstar_difference(prob.mesh, a, a) == 0.0


def test_l2_difference_of_constant_offset():
    # piecewise-constant interpolants differing by a constant c over (0, T)
    prob = preset_problem("stationary", time__N=4, time__T=0.02)
    a = stepper.run(prob)
    b = stepper.run(prob)
    for s in b.states:
        s.theta = s.theta + 0.5
    expected = 0.5 * math.sqrt(0.02 * prob.mesh.length)
    assert continuation.l2_difference(prob.mesh, a, b, ("theta",)) == pytest.approx(expected, rel=1e-12)


def test_strictly_decreasing():
    assert continuation.strictly_decreasing([3, 2, 1])
    assert not continuation.strictly_decreasing([3, 3, 1])
    assert continuation.strictly_decreasing([1])


def test_failed_level_marks_row(monkeypatch):
    prob = preset_problem("smooth-regular", mesh__n_cells=16, time__N=4, time__T=0.01)
    real = stepper._single_step

    def failing(problem, st, h):
        if problem.n_steps == 8 and st.n >= 1:
            raise stepper.StepFailure("forced")
        return real(problem, st, h)

    monkeypatch.setattr(stepper, "_single_step", failing)
    table = continuation.continuation(prob, "h", 2)
    assert table.failed
    assert table.levels[1].failed and not table.levels[0].failed
    assert np.isnan(table.differences[0].l2)


def test_ceiling_report():
    prob = preset_problem("sweep-tau", time__N=50, time__T=0.01)
    table = continuation.continuation(prob, "tau", 2)
    rep = continuation.bound_ceiling_report(table)
    assert set(rep) == set(diagnostics.BOUND_NAMES)
    first, second = table.levels[0].bounds, table.levels[1].bounds
    tau0, tau1 = 0.01, 0.005
    name = "dlntheta_L2Vstar"
    expected = max(1.0, second[name] * (1 + 1 / tau0) / (1 + 1 / tau1) / first[name])
    assert rep[name][1] == pytest.approx(expected, rel=1e-12)
    name = "theta_L2V"
    assert rep[name][1] == pytest.approx(max(1.0, second[name] / first[name]), rel=1e-12)
    assert rep[name][0] == (rep[name][1] <= 2.0)
