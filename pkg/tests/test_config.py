import numpy as np
import pytest

from entroflow import config, presets
from entroflow.errors import ConfigError


@pytest.mark.parametrize("name", sorted(presets.PRESETS))
def test_presets_build(name):
    cfg = config.loads(presets.get(name))
    prob = cfg.problem
    assert prob.n_steps * prob.h == pytest.approx(prob.t_final, rel=1e-15)


def test_sections_and_prefixes_agree():
    a = config.read_text("mesh.n_cells = 8\nparams.tau = 0.5\n")
    b = config.read_text("[mesh]\nn_cells = 8\n[params]\ntau = 0.5\n")
    assert a == b
    assert a["mesh.n_cells"] == "8"
    assert a["params.eps"] == config.DEFAULTS["params.eps"]


def test_comments_allowed():
    v = config.read_text("# header\nmesh.n_cells = 8  # inline\n; other\n")
    assert v["mesh.n_cells"] == "8"


@pytest.mark.parametrize("text, match", [
    ("mesh.cells = 8\n", "unknown key"),
    ("mesh.n_cells = 8\nmesh.n_cells = 9\n", "already exists"),
    ("params.tau = 0,5\n", "decimal real"),
    ("mesh.n_cells = 8.0\n", "integer"),
    ("params.graph = cubic\n", "cubic"),
    ("boundary.theta_left.kind = square\n", "theta_left.kind"),
    ("initial.phi.kind = gauss\n", "initial.phi.kind"),
    ("initial.theta.mean = 3.0\n", "temperature bounds"),
    ("boundary.alpha0 = 20.0\n", "robin"),
    ("params.graph = indicator\ninitial.phi.mean = 1.0\n", "initial phase"),
    ("params.eps = 2.0\n", "eps"),
    ("time.N = 0\n", "N >= 1"),
])
def test_rejections(text, match):
    with pytest.raises(ConfigError, match=match):
        config.loads(text)


def test_random_profile_uses_seed():
    text = "initial.phi.kind = random\ninitial.phi.amplitude = 0.5\ntime.N = 2000\n"
    a = config.loads(text, {"seed": "3"}).problem.data.phi0
    b = config.loads(text, {"seed": "3"}).problem.data.phi0
    c = config.loads(text, {"seed": "4"}).problem.data.phi0
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_equilibrium_mu():
    prob = config.loads(presets.get("stationary")).problem
    assert np.allclose(prob.data.mu0, prob.data.mu0[0])


def test_load_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(presets.get("stationary"))
    cfg = config.load(path, {"output.dir": "elsewhere"})
    assert cfg.output_dir == "elsewhere"
    with pytest.raises(ConfigError, match="cannot read"):
        config.load(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        config.load(path, {"not.a.key": "1"})
