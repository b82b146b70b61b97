"""Flat ``key = value`` run configuration.

Keys carry dotted section prefixes (``mesh.n_cells = 64``); an INI-style
``[mesh]`` header is accepted as an alternative spelling of the prefix.
``#`` and ``;`` start comments.  Reals use a dot as the decimal separator;
lists (piecewise breaks and values) are comma separated.

Every key has a default; unknown keys are rejected so that typos fail
before any computation starts.
"""

import configparser
import re
from dataclasses import dataclass
from pathlib import Path

from .discretization import Mesh
from .errors import ConfigError
from .graphs import GraphSpec, LatentHeat
from .model import (BoundaryAndData, Constant, PhysParams, PiecewiseConstant, Profile,
                    Sinusoidal, Source, equilibrium_mu)
from .stepper import Problem

_REAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_INT = re.compile(r"^[+-]?\d+$")
_ROOT = "__root__"


def _time_function_keys(prefix, value):
    return {
        f"{prefix}.kind": "constant",
        f"{prefix}.value": value,
        f"{prefix}.breaks": "",
        f"{prefix}.values": "",
        f"{prefix}.mean": value,
        f"{prefix}.amplitude": "0.0",
        f"{prefix}.period": "1.0",
        f"{prefix}.phase": "0.0",
    }


def _profile_keys(prefix, mean):
    return {
        f"{prefix}.kind": "constant",
        f"{prefix}.mean": mean,
        f"{prefix}.amplitude": "0.0",
        f"{prefix}.mode": "1",
        f"{prefix}.center": "0.5",
        f"{prefix}.width": "0.1",
        f"{prefix}.seed": "",
    }


DEFAULTS = {
    "seed": "0",
    "mesh.n_cells": "64",
    "mesh.length": "1.0",
    "time.T": "0.1",
    "time.N": "100",
    "params.c_s": "1.0",
    "params.eta": "1.0",
    "params.gamma": "1.0",
    "params.tau": "1.0",
    "params.eps": "0.1",
    "params.graph": "regular",
    "params.lambda_a1": "1.0",
    "params.lambda_a2": "-1.0",
    "params.theta_a": "0.0",
    "params.theta_b": "0.5",
    "boundary.alpha0": "1.0",
    "boundary.alpha1": "1.0",
    "bounds.alpha_min": "0.1",
    "bounds.alpha_max": "10.0",
    "bounds.theta_min": "0.5",
    "bounds.theta_max": "2.0",
    **_time_function_keys("boundary.theta_left", "1.0"),
    **_time_function_keys("boundary.theta_right", "1.0"),
    **_time_function_keys("source", "0.0"),
    "source.mode": "0",
    **_profile_keys("initial.theta", "1.0"),
    **_profile_keys("initial.phi", "0.0"),
    "initial.mu": "0.0",
    "output.dir": "",
}


def parse_real(key, text):
    text = text.strip()
    if not _REAL.match(text):
        raise ConfigError(f"{key}: expected a decimal real with '.' separator, got {text!r}")
    return float(text)


def parse_int(key, text):
    text = text.strip()
    if not _INT.match(text):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(text)


def parse_reals(key, text):
    text = text.strip()
    if not text:
        return ()
    return tuple(parse_real(key, part) for part in text.split(","))


def read_text(text, source="<string>"):
    """Parse configuration text into a flat ``{key: raw string}`` dict with defaults."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",), default_section="__defaults__",
                                       delimiters=("=",), strict=True)
    parser.optionxform = str
    try:
        parser.read_string(f"[{_ROOT}]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = dict(DEFAULTS)
    unknown = []
    for section in parser.sections():
        for key, raw in parser.items(section):
            full = key if section == _ROOT else f"{section}.{key}"
            if full not in DEFAULTS:
                unknown.append(full)
            values[full] = raw.strip()
    if unknown:
        raise ConfigError(f"{source}: unknown key(s): {', '.join(sorted(unknown))}")
    return values


def read_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return read_text(text, str(path))


def _time_function(values, prefix):
    kind = values[f"{prefix}.kind"].lower()
    try:
        if kind == "constant":
            return Constant(parse_real(f"{prefix}.value", values[f"{prefix}.value"]))
        if kind == "piecewise":
            return PiecewiseConstant(parse_reals(f"{prefix}.breaks", values[f"{prefix}.breaks"]),
                                     parse_reals(f"{prefix}.values", values[f"{prefix}.values"]))
        if kind == "sinusoidal":
            return Sinusoidal(parse_real(f"{prefix}.mean", values[f"{prefix}.mean"]),
                              parse_real(f"{prefix}.amplitude", values[f"{prefix}.amplitude"]),
                              parse_real(f"{prefix}.period", values[f"{prefix}.period"]),
                              parse_real(f"{prefix}.phase", values[f"{prefix}.phase"]))
    except ValueError as exc:
        raise ConfigError(f"{prefix}: {exc}") from None
    raise ConfigError(f"{prefix}.kind: expected constant, piecewise or sinusoidal, got {kind!r}")


def _profile(values, prefix, default_seed):
    kind = values[f"{prefix}.kind"].lower()
    if kind not in ("constant", "cosine", "tanh", "random"):
        raise ConfigError(f"{prefix}.kind: expected constant, cosine, tanh or random, got {kind!r}")
    seed_text = values[f"{prefix}.seed"]
    return Profile(
        kind=kind,
        mean=parse_real(f"{prefix}.mean", values[f"{prefix}.mean"]),
        amplitude=parse_real(f"{prefix}.amplitude", values[f"{prefix}.amplitude"]),
        mode=parse_int(f"{prefix}.mode", values[f"{prefix}.mode"]),
        center=parse_real(f"{prefix}.center", values[f"{prefix}.center"]),
        width=parse_real(f"{prefix}.width", values[f"{prefix}.width"]),
        seed=parse_int(f"{prefix}.seed", seed_text) if seed_text else default_seed,
    )


@dataclass
class RunConfig:
    """A parsed configuration and the problem it defines."""

    values: dict
    problem: Problem
    output_dir: str
    seed: int


def build(values):
    """Turn parsed values into a validated :class:`RunConfig` (raises ``ConfigError``)."""
    r = lambda k: parse_real(k, values[k])  # noqa: E731
    i = lambda k: parse_int(k, values[k])  # noqa: E731
    seed = i("seed")
    try:
        mesh = Mesh(i("mesh.n_cells"), r("mesh.length"), (r("boundary.alpha0"), r("boundary.alpha1")))
        params = PhysParams(
            c_s=r("params.c_s"), eta=r("params.eta"), gamma=r("params.gamma"), tau=r("params.tau"),
            eps=r("params.eps"), graph=GraphSpec.parse(values["params.graph"]),
            latent=LatentHeat(r("params.lambda_a1"), r("params.lambda_a2")),
            theta_a=r("params.theta_a"), theta_b=r("params.theta_b"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    theta0 = _profile(values, "initial.theta", seed).evaluate(mesh)
    phi0 = _profile(values, "initial.phi", seed + 1).evaluate(mesh)
    mu_text = values["initial.mu"].strip().lower()
    if mu_text == "equilibrium":
        mu0 = equilibrium_mu(params, phi0, theta0)
    else:
        mu0 = parse_real("initial.mu", mu_text) + 0.0 * phi0
    data = BoundaryAndData(
        theta0=theta0, phi0=phi0, mu0=mu0,
        theta_gamma=(_time_function(values, "boundary.theta_left"),
                     _time_function(values, "boundary.theta_right")),
        source=Source(_time_function(values, "source"), i("source.mode")),
        theta_bounds=(r("bounds.theta_min"), r("bounds.theta_max")),
        alpha_bounds=(r("bounds.alpha_min"), r("bounds.alpha_max")),
    )
    problem = Problem(params, data, mesh, r("time.T"), i("time.N"))
    problem.validate()
    return RunConfig(values, problem, values["output.dir"], seed)


def load(path, overrides=None):
    """Read, apply ``overrides`` (``{key: str}``) and build a config file."""
    values = read_file(path)
    for k, v in (overrides or {}).items():
        if k not in DEFAULTS:
            raise ConfigError(f"unknown key {k}")
        values[k] = v
    return build(values)


def loads(text, overrides=None):
    values = read_text(text)
    for k, v in (overrides or {}).items():
        if k not in DEFAULTS:
            raise ConfigError(f"unknown key {k}")
        values[k] = v
    return build(values)
