import json
import os
import subprocess
import sys

import pytest

from entroflow._backend import available

SNIPPET = """
import json
from entroflow import config, presets, stepper
from entroflow._backend import BACKEND
cfg = config.loads(presets.get("smooth-logarithmic"), {"time.N": "10", "time.T": "0.025"})
traj = stepper.run(cfg.problem)
s = traj.states[-1]
print(json.dumps({"backend": BACKEND, "theta": s.theta.tolist(), "phi": s.phi.tolist()}))
"""


def _run(name):
    env = dict(os.environ, ENTROFLOW_BACKEND=name)
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout)


def test_forced_python_backend():
    assert _run("python")["backend"] == "python"


def test_unknown_backend_is_rejected():
    env = dict(os.environ, ENTROFLOW_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import entroflow"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "ENTROFLOW_BACKEND" in out.stderr


@pytest.mark.skipif(len(available()) < 2, reason="compiled kernels not built")
def test_backends_give_the_same_run():
    a, b = _run("python"), _run("cython")
    for k in ("theta", "phi"):
        assert max(abs(x - y) for x, y in zip(a[k], b[k])) <= 1e-12
