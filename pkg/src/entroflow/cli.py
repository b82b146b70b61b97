"""Command line front end: ``entroflow run|sweep|check|oracle|preset``.

Exit codes: 0 success, 1 configuration or usage error, 2 step failure,
3 invariant violation.
"""

import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import config as config_mod
from . import continuation, diagnostics, oracle, presets, stepper
from ._backend import BACKEND
from .errors import ConfigError, InvariantViolation, StepFailure
from .graphs import coercivity_constant

EXIT_OK, EXIT_CONFIG, EXIT_STEP, EXIT_INVARIANT = 0, 1, 2, 3

TRAJECTORY_HEADER = ["t", "node", "theta", "phi", "mu", "u"]
DIAGNOSTICS_HEADER = ["t", "conserved_total", "energy", "min_theta", "fp_iters", "max_ratio",
                      "slack_a15", "slack_a2", "slack_a13"]
SWEEP_HEADER = (["row", "level", "fine_level", "param", "value", "failed",
                 "l2", "l2_theta", "l2_phi", "l2_mu", "c_vstar"] + list(diagnostics.BOUND_NAMES))

log = logging.getLogger("entroflow")


class _Exit(Exception):
    def __init__(self, code, message=None):
        super().__init__(message)
        self.code = code
        self.message = message


def fmt(x):
    """Reals at 17 significant digits; integers and strings unchanged."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return "" if x is None else str(x)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def output_dir(cli_out, cfg_dir):
    """``--out`` beats ``ENTROFLOW_OUT`` beats ``output.dir``; default is the cwd."""
    for candidate in (cli_out, os.environ.get("ENTROFLOW_OUT"), cfg_dir):
        if candidate:
            path = Path(candidate)
            break
    else:
        path = Path.cwd()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(path):
    try:
        return config_mod.load(path)
    except ConfigError as exc:
        raise _Exit(EXIT_CONFIG, f"config error: {exc}") from None


# ---------------------------------------------------------------------------
# writers


def write_trajectory(path, traj):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for s in traj.states:
            for i in range(len(s.theta)):
                w.writerow([fmt(s.t), i, fmt(s.theta[i]), fmt(s.phi[i]), fmt(s.mu[i]), fmt(s.u[i])])


def write_diagnostics(path, traj):
    prob = traj.problem
    m, p, h = prob.mesh, prob.params, prob.h
    s0 = traj.states[0]
    nan = math.nan
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTICS_HEADER)
        w.writerow([fmt(x) for x in (s0.t, diagnostics.conserved_total(m, s0.phi, s0.mu, h),
                                     diagnostics.energy(m, p, s0.phi, s0.mu, h),
                                     float(np.min(s0.theta)), nan, nan, nan, nan, nan)])
        for r in traj.reports:
            w.writerow([fmt(x) for x in (r.t, r.conserved_total, r.energy, r.min_theta,
                                         r.fp_iterations, r.max_ratio, r.slack_a15,
                                         r.slack_a2, r.slack_a13)])


def summarize(traj):
    prob = traj.problem
    p = prob.params
    reports = traj.reports
    checked = [x for r in reports for x in r.checked_ratios]
    return {
        "completed": traj.completed,
        "failure": traj.failure,
        "backend": BACKEND,
        "steps_done": len(reports),
        "steps_requested": prob.n_steps,
        "h": prob.h,
        "h0": stepper.step_guard(p),
        "guard_entries": stepper.guard_entries(p),
        "q_theory": stepper.contraction_bound(p, prob.h),
        "max_ratio": max(checked) if checked else None,
        "conservation_drift": diagnostics.relative_drift(traj.conserved_totals()),
        "min_theta": min([float(np.min(s.theta)) for s in traj.states]),
        "min_slack": {k: min((getattr(r, k) for r in reports), default=None)
                      for k in ("slack_a15", "slack_a2", "slack_a13")},
        "max_residual": {k: max((r.residuals[k] for r in reports), default=None)
                         for k in ("A", "mu", "B")},
        "max_identity_defect": max((r.identity_defect for r in reports), default=None),
        "coercivity_constant": coercivity_constant(p.graph, p.eps, p.gamma),
        "bounds": diagnostics.bound_tracker(traj),
    }


def write_sweep(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        blank = [""] * 5
        for lv in table.levels:
            w.writerow(["level", lv.level, "", table.param, fmt(lv.value), int(lv.failed)] + blank
                       + [fmt(lv.bounds[k]) for k in diagnostics.BOUND_NAMES])
        for d in table.differences:
            w.writerow(["pair", d.coarse, d.fine, table.param, "",
                        int(table.levels[d.coarse].failed or table.levels[d.fine].failed)]
                       + [fmt(x) for x in (d.l2, d.l2_theta, d.l2_phi, d.l2_mu, d.c_vstar)]
                       + [""] * len(diagnostics.BOUND_NAMES))


# ---------------------------------------------------------------------------
# commands


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log solver progress to stderr.")
def cli(verbose):
    """Phase separation with entropy balance: implicit fixed-point solver."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command("run")
@click.option("--config", "config_path", required=True, help="Configuration file.")
@click.option("--out", default=None, help="Output directory.")
def cmd_run(config_path, out):
    """Run one configuration and write trajectory, diagnostics and summary."""
    cfg = _load(config_path)
    outdir = output_dir(out, cfg.output_dir)
    try:
        traj = stepper.run(cfg.problem)
    except InvariantViolation as exc:
        raise _Exit(EXIT_INVARIANT, f"invariant violated: {exc}") from None
    write_trajectory(outdir / "trajectory.csv", traj)
    write_diagnostics(outdir / "diagnostics.csv", traj)
    with open(outdir / "summary.json", "w") as fh:
        json.dump(_json_safe(summarize(traj)), fh, indent=2, allow_nan=False)
    if traj.failure:
        raise _Exit(EXIT_STEP, f"step failure at step {traj.failure['step']}: {traj.failure['message']}")
    click.echo(f"{len(traj.reports)} steps written to {outdir}")


@cli.command("sweep")
@click.option("--config", "config_path", required=True, help="Base configuration file.")
@click.option("--param", type=click.Choice(continuation.PARAMS), required=True)
@click.option("--levels", type=int, required=True, help="Number of levels (>= 2).")
@click.option("--out", default=None, help="Output directory.")
def cmd_sweep(config_path, param, levels, out):
    """Halve ``param`` level by level and compare the trajectories."""
    cfg = _load(config_path)
    outdir = output_dir(out, cfg.output_dir)
    try:
        table = continuation.continuation(cfg.problem, param, levels)
    except ConfigError as exc:
        raise _Exit(EXIT_CONFIG, f"config error: {exc}") from None
    except InvariantViolation as exc:
        raise _Exit(EXIT_INVARIANT, f"invariant violated: {exc}") from None
    write_sweep(outdir / "sweep.csv", table)
    for d in table.differences:
        click.echo(f"levels {d.coarse}-{d.fine}: L2(H) {d.l2:.6e}  C(V*) {d.c_vstar:.6e}")
    if table.failed:
        raise _Exit(EXIT_STEP, "at least one sweep level failed")


def check_suite(names=presets.CHECK_SUITE, slack_tol=None, echo=click.echo):
    """Run presets with every per-step check enabled; raises on the first violation."""
    for name in names:
        cfg = config_mod.loads(presets.get(name))
        traj = stepper.run(cfg.problem, check=True, slack_tol=slack_tol)
        if traj.failure:
            raise StepFailure(f"preset {name}: {traj.failure['message']}")
        drift = diagnostics.relative_drift(traj.conserved_totals())
        if drift > diagnostics.CONSERVATION_TOL:
            raise InvariantViolation(f"conservation: preset {name} drifts by {drift:.3e}")
        energies = [diagnostics.energy(cfg.problem.mesh, cfg.problem.params, s.phi, s.mu, cfg.problem.h)
                    for s in traj.states]
        tele = diagnostics.energy_telescoping_defect(energies, [r.energy_increment for r in traj.reports])
        if tele > 1e-12:
            raise InvariantViolation(f"energy telescoping: preset {name} defect {tele:.3e}")
        if name == "stationary":
            s0 = traj.states[0]
            dev = max(float(np.max(np.abs(getattr(s, k) - getattr(s0, k))))
                      for s in traj.states for k in ("theta", "phi", "mu", "u"))
            if dev > 1e-10:
                raise InvariantViolation(f"stationary preservation: deviation {dev:.3e}")
        worst = min(min(r.slack_a15, r.slack_a2, r.slack_a13) for r in traj.reports)
        echo(f"ok  {name:<20s} steps={len(traj.reports):4d}  drift={drift:.2e}  min_slack={worst:.2e}")


@cli.command("check")
@click.option("--slack-tol", type=float, default=None, hidden=True)
def cmd_check(slack_tol):
    """Run the invariant battery on the preset suite."""
    try:
        check_suite(slack_tol=slack_tol)
    except InvariantViolation as exc:
        raise _Exit(EXIT_INVARIANT, f"invariant violated: {exc}") from None
    except StepFailure as exc:
        raise _Exit(EXIT_STEP, f"step failure: {exc}") from None
    click.echo("all invariants hold")


@cli.command("oracle")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--cases", type=click.IntRange(1), default=20, show_default=True,
              help="Random cases per graph kind.")
def cmd_oracle(seed, cases):
    """Compare the stepper with the dense oracle on random 3-node problems."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for graph in ("regular", "logarithmic", "indicator"):
        errs = []
        for _ in range(cases):
            try:
                c = oracle.compare_case(rng, graph)
            except (StepFailure, oracle.OracleError) as exc:
                raise _Exit(EXIT_INVARIANT, f"oracle comparison failed for {graph}: {exc}") from None
            errs.append(max(c["theta"], c["phi"], c["mu"]))
        worst = max(worst, max(errs))
        click.echo(f"{graph:<12s} cases={cases}  max_error={max(errs):.3e}")
    if worst > 1e-9:
        raise _Exit(EXIT_INVARIANT, f"invariant violated: oracle agreement {worst:.3e} > 1e-9")


@cli.command("preset")
@click.argument("name", required=False)
def cmd_preset(name):
    """Print a preset configuration (or list the available names)."""
    if name is None:
        for n in sorted(presets.PRESETS):
            click.echo(n)
        return
    try:
        click.echo(presets.get(name), nl=False)
    except KeyError as exc:
        raise _Exit(EXIT_CONFIG, str(exc.args[0])) from None


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="entroflow", standalone_mode=False)
    except _Exit as exc:
        if exc.message:
            click.echo(exc.message, err=True)
        return exc.code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
