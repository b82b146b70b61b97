"""Named configurations shipped with the package.

``smooth-*`` exercise each graph on a 64-cell mesh for 100 steps with
time-dependent boundary data and a source; ``guard`` runs at exactly half
the admissible step for the default latent heat ``r - r^2``;
``stationary`` is an exact steady state; ``sweep-*`` are the bases of the
continuation studies.
"""

_SMOOTH = """\
mesh.n_cells = 64
mesh.length = 1.0
time.T = 0.25
time.N = 100
params.c_s = 1.0
params.eta = 1.0
params.gamma = 0.01
params.tau = 1.0
params.eps = 0.1
params.graph = {graph}
params.lambda_a1 = 1.0
params.lambda_a2 = -0.01
params.theta_a = 0.0
params.theta_b = 0.25
boundary.alpha0 = 1.0
boundary.alpha1 = 2.0
boundary.theta_left.kind = constant
boundary.theta_left.value = 1.2
boundary.theta_right.kind = sinusoidal
boundary.theta_right.mean = 1.0
boundary.theta_right.amplitude = 0.2
boundary.theta_right.period = 0.5
source.kind = piecewise
source.breaks = 0.1
source.values = 0.5, -0.25
source.mode = 1
initial.theta.kind = cosine
initial.theta.mean = 1.0
initial.theta.amplitude = 0.3
initial.theta.mode = 1
initial.phi.kind = cosine
initial.phi.mean = 0.1
initial.phi.amplitude = 0.9
initial.phi.mode = 2
initial.mu = 0.0
"""


def _with(text, comment, changes):
    """``text`` with the given keys replaced, headed by ``comment``."""
    lines = []
    for line in text.splitlines():
        key = line.split("=", 1)[0].strip()
        lines.append(f"{key} = {changes[key]}" if key in changes else line)
    return comment + "\n" + "\n".join(lines) + "\n"


PRESETS = {
    "stationary": """\
# constant state compatible with the data: stays fixed for all time
mesh.n_cells = 32
time.T = 0.25
time.N = 50
params.graph = regular
params.gamma = 1.0
params.tau = 1.0
params.eps = 0.1
params.lambda_a1 = 0.1
params.lambda_a2 = -0.1
params.theta_b = 0.5
# lambda'(0.5) = 0 decouples temperature and phase
initial.phi.kind = constant
initial.phi.mean = 0.5
initial.theta.kind = constant
initial.theta.mean = 1.0
boundary.theta_left.value = 1.0
boundary.theta_right.value = 1.0
source.value = 0.0
initial.mu = equilibrium
""",
    "smooth-regular": _SMOOTH.format(graph="regular"),
    "smooth-logarithmic": _SMOOTH.format(graph="logarithmic"),
    "smooth-indicator": _SMOOTH.format(graph="indicator"),
    "guard": """\
# h = 0.5*h0 with h0 = 0.01/882 for c_s = 1, eps = 0.1, tau = 0.1,
# lambda(r) = r - r^2, theta_b = 0.5, gamma = 1
mesh.n_cells = 64
time.T = 0.000566893424036281
time.N = 100
params.c_s = 1.0
params.eps = 0.1
params.tau = 0.1
params.gamma = 1.0
params.lambda_a1 = 1.0
params.lambda_a2 = -1.0
params.theta_b = 0.5
params.graph = regular
initial.theta.kind = cosine
initial.theta.mean = 1.0
initial.theta.amplitude = 0.4
initial.phi.kind = random
initial.phi.mean = 0.0
initial.phi.amplitude = 0.5
initial.phi.seed = 7
boundary.theta_left.value = 1.5
boundary.theta_right.value = 0.8
source.value = 1.0
""",
    "sweep-eps": _with(_SMOOTH.format(graph="regular"), """\
# eps = 0.1, 0.05, 0.025 share h = 0.001 (admissible at the finest level)""", {
        "mesh.n_cells": "32", "time.T": "0.2", "time.N": "200"}),
    "sweep-h": _with(_SMOOTH.format(graph="regular"), """\
# h = 0.0025, 0.00125, 0.000625""", {
        "mesh.n_cells": "32", "time.T": "0.2", "time.N": "80"}),
    "sweep-tau": _with(_SMOOTH.format(graph="regular"), """\
# tau = 0.01, 0.005, 0.0025 with a long-wave phase, where tau*k^2 << 1
# for the modes that carry the dynamics""", {
        "mesh.n_cells": "32", "time.T": "0.1", "time.N": "500", "params.tau": "0.01",
        "params.c_s": "2.0", "params.eps": "0.2", "params.gamma": "0.05",
        "initial.phi.mode": "1", "initial.phi.amplitude": "0.5"}),
}

SWEEPS = {"eps": "sweep-eps", "h": "sweep-h", "tau": "sweep-tau"}

#: presets run by ``entroflow check`` and the acceptance suite
CHECK_SUITE = ("stationary", "smooth-regular", "smooth-logarithmic", "smooth-indicator", "guard")


def get(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
