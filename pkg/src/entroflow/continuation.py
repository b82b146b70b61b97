"""Continuation studies: rerun a problem along a halving schedule in h, eps or tau.

Consecutive levels are compared in two time norms:

* ``L2(0,T;H)`` of the piecewise-constant (right endpoint) interpolants,
  integrated exactly on the union of the two time grids;
* ``C([0,T];V*)`` of the piecewise-linear interpolants, whose maximum is
  attained at a breakpoint of the union grid.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics
from .discretization import dual_norm_V
from .errors import ConfigError
from .stepper import Problem, run

PARAMS = ("h", "eps", "tau")


@dataclass
class LevelResult:
    level: int
    value: float
    problem: Problem
    trajectory: object
    runtime: float
    bounds: dict = field(default_factory=dict)

    @property
    def failed(self):
        return not self.trajectory.completed


@dataclass
class PairDifference:
    coarse: int
    fine: int
    l2: float            # (theta, phi) combined
    l2_theta: float
    l2_phi: float
    l2_mu: float
    c_vstar: float       # (theta, phi) combined


@dataclass
class ConvergenceTable:
    param: str
    levels: list
    differences: list

    @property
    def failed(self):
        return any(lv.failed for lv in self.levels)

    def l2_differences(self):
        return [d.l2 for d in self.differences]


def schedule(problem, param, levels):
    """Problems for ``levels`` halving steps of ``param`` starting at ``problem``.

    For ``eps`` and ``tau`` the time grid is shared, so the step size must
    satisfy the guard at the finest level; this is checked before anything
    runs.  For ``h`` the step count doubles at each level.
    """
    if param not in PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {', '.join(PARAMS)}")
    if levels < 2:
        raise ConfigError(f"a sweep needs at least 2 levels, got {levels}")
    out = []
    for k in range(levels):
        if param == "h":
            prob = replace(problem, n_steps=problem.n_steps * 2**k)
            value = prob.h
        else:
            value = getattr(problem.params, param) / 2**k
            prob = replace(problem, params=problem.params.replace(**{param: value}))
        out.append((value, prob))
    for value, prob in out:
        try:
            prob.validate()
        except ConfigError as exc:
            raise ConfigError(f"sweep level {param} = {value:.6g}: {exc}") from None
    return out


def _interval_index(times, t):
    # index of the state representing (t_{k-1}, t_k] that contains t
    return int(np.clip(np.searchsorted(times, t, side="left"), 1, len(times) - 1))


def _union_grid(ta, tb):
    grid = np.union1d(ta, tb)
    # merge breakpoints that differ only by rounding
    keep = np.concatenate([[True], np.diff(grid) > 1e-12 * max(1.0, grid[-1])])
    return grid[keep]


def l2_difference(m, traj_a, traj_b, names=("theta", "phi")):
    """``L2(0,T;H)`` distance of piecewise-constant interpolants of the named fields."""
    ta, tb = traj_a.times, traj_b.times
    grid = _union_grid(ta, tb)
    total = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        mid = 0.5 * (a + b)
        sa = traj_a.states[_interval_index(ta, mid)]
        sb = traj_b.states[_interval_index(tb, mid)]
        for name in names:
            diff = getattr(sa, name) - getattr(sb, name)
            total += (b - a) * m.inner(diff, diff)
    return math.sqrt(total)


def _linear_value(traj, times, name, t):
    k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
    t0, t1 = times[k], times[k + 1]
    w = 0.0 if t1 == t0 else min(1.0, max(0.0, (t - t0) / (t1 - t0)))
    return (1 - w) * getattr(traj.states[k], name) + w * getattr(traj.states[k + 1], name)


def cvstar_difference(m, traj_a, traj_b, names=("theta", "phi")):
    """``C([0,T];V*)`` distance of piecewise-linear interpolants."""
    ta, tb = traj_a.times, traj_b.times
    best = 0.0
    for t in _union_grid(ta, tb):
        sq = 0.0
        for name in names:
            diff = _linear_value(traj_a, ta, name, t) - _linear_value(traj_b, tb, name, t)
            sq += dual_norm_V(m, diff) ** 2
        best = max(best, math.sqrt(sq))
    return best


def compare(m, traj_a, traj_b, i, j):
    return PairDifference(
        coarse=i, fine=j,
        l2=l2_difference(m, traj_a, traj_b),
        l2_theta=l2_difference(m, traj_a, traj_b, ("theta",)),
        l2_phi=l2_difference(m, traj_a, traj_b, ("phi",)),
        l2_mu=l2_difference(m, traj_a, traj_b, ("mu",)),
        c_vstar=cvstar_difference(m, traj_a, traj_b),
    )


def continuation(problem, param, levels, check=False):
    """Run the halving schedule and tabulate pairwise differences and bounds."""
    results = []
    for k, (value, prob) in enumerate(schedule(problem, param, levels)):
        start = time.perf_counter()
        traj = run(prob, check=check, validate=False)
        elapsed = time.perf_counter() - start
        results.append(LevelResult(k, value, prob, traj, elapsed, diagnostics.bound_tracker(traj)))
    diffs = []
    for a, b in zip(results[:-1], results[1:]):
        if a.failed or b.failed:
            nan = math.nan
            diffs.append(PairDifference(a.level, b.level, nan, nan, nan, nan, nan))
        else:
            diffs.append(compare(problem.mesh, a.trajectory, b.trajectory, a.level, b.level))
    return ConvergenceTable(param, results, diffs)


def strictly_decreasing(values):
    return all(b < a for a, b in zip(values[:-1], values[1:]))


def bound_ceiling_report(table, factor=2.0):
    """Check the bound rows of a tau sweep against a level-independent ceiling.

    Unweighted rows must stay within ``factor`` times their first-level
    value; the rows in ``WEIGHTED_BOUNDS`` may additionally grow like
    ``1 + 1/tau``.  Returns ``{row: (ok, worst_ratio)}``.
    """
    first = table.levels[0]
    tau0 = first.problem.params.tau
    out = {}
    for name in diagnostics.BOUND_NAMES:
        base = first.bounds[name]
        worst = 0.0
        for lv in table.levels:
            val = lv.bounds[name]
            if name in diagnostics.WEIGHTED_BOUNDS:
                tau = lv.problem.params.tau
                val = val * (1.0 + 1.0 / tau0) / (1.0 + 1.0 / tau)
            ratio = val / base if base > 0 else (0.0 if val == 0 else math.inf)
            worst = max(worst, ratio)
        out[name] = (worst <= factor, worst)
    return out
