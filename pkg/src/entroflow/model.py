"""Physical parameters, boundary/initial data and the discrete state."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import graphs
from .errors import ConfigError
from .graphs import GraphSpec, LatentHeat

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class PhysParams:
    """Coefficients of the phase-field system and its regularization.

    ``sigma(r) = theta_a*r - theta_b*r^2`` is the smooth part of the
    double-well potential; ``latent`` is the latent-heat function.
    """

    c_s: float = 1.0
    eta: float = 1.0
    gamma: float = 1.0
    tau: float = 1.0
    eps: float = 0.1
    graph: GraphSpec = GraphSpec.REGULAR
    latent: LatentHeat = field(default_factory=LatentHeat)
    theta_a: float = 0.0
    theta_b: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "graph", GraphSpec.parse(self.graph))
        for name in ("c_s", "eta", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.tau >= 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau!r}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps!r}")

    def replace(self, **changes):
        return replace(self, **changes)

    def sigma(self, r):
        return self.theta_a * r - self.theta_b * r * r

    def sigma_prime(self, r):
        return self.theta_a - 2.0 * self.theta_b * r

    @property
    def sigma_second(self):
        return -2.0 * self.theta_b

    @property
    def sigma_second_sup(self):
        return 2.0 * abs(self.theta_b)

    def lam(self, r):
        return graphs.lambda_trunc(self.latent, self.eps, r)

    def lam_prime(self, r):
        return graphs.lambda_trunc_prime(self.latent, self.eps, r)

    @property
    def lam_prime_sup(self):
        return self.latent.sup_prime(self.eps)


# ---------------------------------------------------------------------------
# time functions


class TimeFunction:
    """Scalar function of time with known range."""

    def __call__(self, t):
        raise NotImplementedError

    def bounds(self, t_final):
        """``(min, max)`` over ``[0, t_final]``."""
        raise NotImplementedError

    def average(self, t0, t1):
        """Mean over ``(t0, t1)`` by 4-point Gauss-Legendre quadrature."""
        mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
        vals = np.asarray(self(mid + half * _GAUSS_X), dtype=float)
        return 0.5 * float(np.dot(_GAUSS_W, vals))


@dataclass(frozen=True)
class Constant(TimeFunction):
    value: float

    def __call__(self, t):
        return np.full(np.shape(t), self.value, dtype=float) if np.ndim(t) else float(self.value)

    def bounds(self, t_final):
        return (self.value, self.value)


@dataclass(frozen=True)
class PiecewiseConstant(TimeFunction):
    """``values[k]`` on ``[breaks[k-1], breaks[k])``; ``len(values) == len(breaks) + 1``."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("piecewise function needs len(values) == len(breaks) + 1")
        if list(self.breaks) != sorted(self.breaks):
            raise ValueError("breaks must be increasing")

    def __call__(self, t):
        idx = np.searchsorted(np.asarray(self.breaks, dtype=float), t, side="right")
        out = np.asarray(self.values, dtype=float)[idx]
        return out if np.ndim(t) else float(out)

    def bounds(self, t_final):
        active = [v for k, v in enumerate(self.values) if k == 0 or self.breaks[k - 1] <= t_final]
        return (min(active), max(active))


@dataclass(frozen=True)
class Sinusoidal(TimeFunction):
    """``mean + amplitude * sin(2 pi t / period + phase)``."""

    mean: float
    amplitude: float
    period: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")

    def __call__(self, t):
        return self.mean + self.amplitude * np.sin(2.0 * math.pi * np.asarray(t) / self.period + self.phase)

    def bounds(self, t_final):
        # conservative: the full oscillation range
        a = abs(self.amplitude)
        return (self.mean - a, self.mean + a)


@dataclass(frozen=True)
class Source:
    """Separable entropy source ``f(x, t) = g(t) * cos(mode * pi * x / L)``."""

    temporal: TimeFunction = Constant(0.0)
    mode: int = 0

    def shape(self, mesh):
        return np.cos(self.mode * math.pi * mesh.nodes / mesh.length)

    def average(self, mesh, t0, t1):
        """Nodal interval average ``(1/h) int_{t0}^{t1} f(., s) ds``."""
        return self.temporal.average(t0, t1) * self.shape(mesh)


# ---------------------------------------------------------------------------
# initial profiles


@dataclass(frozen=True)
class Profile:
    """Initial nodal profile.

    kinds: ``constant`` (``mean``), ``cosine`` (``mean + amplitude*cos(mode pi x/L)``),
    ``tanh`` (``mean + amplitude*tanh((x - center)/width)``) and ``random``
    (``mean + amplitude*U(-1, 1)`` per node, seeded).
    """

    kind: str = "constant"
    mean: float = 0.0
    amplitude: float = 0.0
    mode: int = 1
    center: float = 0.5
    width: float = 0.1
    seed: int = 0

    def evaluate(self, mesh):
        x = mesh.nodes
        if self.kind == "constant":
            return np.full(mesh.n_nodes, float(self.mean))
        if self.kind == "cosine":
            return self.mean + self.amplitude * np.cos(self.mode * math.pi * x / mesh.length)
        if self.kind == "tanh":
            return self.mean + self.amplitude * np.tanh((x - self.center * mesh.length) / self.width)
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)
            return self.mean + self.amplitude * rng.uniform(-1.0, 1.0, mesh.n_nodes)
        raise ValueError(f"unknown profile kind {self.kind!r}")


# ---------------------------------------------------------------------------
# data bundle


@dataclass
class BoundaryAndData:
    """Boundary temperature, source, initial data and the bounds they obey."""

    theta0: np.ndarray
    phi0: np.ndarray
    theta_gamma: tuple = (Constant(1.0), Constant(1.0))
    source: Source = field(default_factory=Source)
    mu0: np.ndarray = None
    theta_bounds: tuple = (0.5, 2.0)
    alpha_bounds: tuple = (0.1, 10.0)

    def __post_init__(self):
        self.theta0 = np.asarray(self.theta0, dtype=float)
        self.phi0 = np.asarray(self.phi0, dtype=float)
        self.mu0 = np.zeros_like(self.phi0) if self.mu0 is None else np.asarray(self.mu0, dtype=float)

    def validate(self, mesh, graph, t_final):
        """Raise ``ConfigError`` listing every violated data assumption."""
        graph = GraphSpec.parse(graph)
        problems = []
        for name, arr in (("theta0", self.theta0), ("phi0", self.phi0), ("mu0", self.mu0)):
            if arr.shape != (mesh.n_nodes,):
                problems.append(f"{name} has {arr.shape} values, mesh has {mesh.n_nodes} nodes")
        if problems:
            raise ConfigError("; ".join(problems))
        a_lo, a_hi = self.alpha_bounds
        if not 0 < a_lo <= a_hi:
            problems.append(f"robin: needs 0 < alpha_min <= alpha_max, got {self.alpha_bounds}")
        for k, alpha in enumerate(mesh.robin):
            if not a_lo <= alpha <= a_hi:
                problems.append(f"robin: alpha{k}={alpha} outside [{a_lo}, {a_hi}]")
        t_lo, t_hi = self.theta_bounds
        if not 0 < t_lo <= t_hi:
            problems.append(f"temperature bounds: needs 0 < theta_min <= theta_max, got {self.theta_bounds}")
        if np.min(self.theta0) < t_lo or np.max(self.theta0) > t_hi:
            problems.append(
                f"temperature bounds: theta0 range [{np.min(self.theta0):.6g}, {np.max(self.theta0):.6g}] "
                f"outside [{t_lo}, {t_hi}]")
        for side, fn in zip(("left", "right"), self.theta_gamma):
            lo, hi = fn.bounds(t_final)
            if lo < t_lo or hi > t_hi:
                problems.append(f"temperature bounds: theta_gamma.{side} range [{lo:.6g}, {hi:.6g}] outside [{t_lo}, {t_hi}]")
        if not np.all(np.isfinite(graphs.betahat(graph, self.phi0))):
            problems.append(f"initial phase: betahat(phi0) is infinite somewhere for the {graph.value} graph")
        m0 = mesh.mean(self.phi0)
        d_lo, d_hi = graph.domain
        if not d_lo < m0 < d_hi:
            problems.append(f"initial phase: mean of phi0 m0={m0:.6g} not in the interior of D(beta)")
        if problems:
            raise ConfigError("; ".join(problems))

    def theta_gamma_average(self, t0, t1):
        return tuple(fn.average(t0, t1) for fn in self.theta_gamma)


@dataclass
class State:
    """Nodal unknowns at time level ``n``; ``u = Ln_eps(theta)``."""

    n: int
    t: float
    theta: np.ndarray
    phi: np.ndarray
    mu: np.ndarray
    u: np.ndarray

    def copy(self):
        return State(self.n, self.t, self.theta.copy(), self.phi.copy(), self.mu.copy(), self.u.copy())


def initial_state(params, data):
    """Level 0: ``u_0 = Ln_eps(theta_0)``, ``phi = phi_0``, ``mu = mu_0``."""
    u0 = graphs.Ln_eps(params.eps, data.theta0)
    return State(0, 0.0, data.theta0.copy(), data.phi0.copy(), data.mu0.copy(), u0)


def equilibrium_mu(params, phi, theta):
    """Nodewise ``beta_eps(phi) + sigma'(phi) - lambda_eps'(phi)*theta``.

    For constant ``phi`` and ``theta`` this is the chemical potential that
    keeps the state stationary.
    """
    return (graphs.yosida(params.graph, params.eps, phi) + params.sigma_prime(phi)
            - params.lam_prime(phi) * theta)
