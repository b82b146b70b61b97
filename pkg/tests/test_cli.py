import csv
import json

import numpy as np
import pytest

from entroflow import cli, presets


@pytest.fixture
def stationary_cfg(tmp_path):
    path = tmp_path / "stationary.cfg"
    path.write_text(presets.get("stationary"))
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_run_stationary(stationary_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(stationary_cfg), "--out", str(out)]) == 0
    traj = _rows(out / "trajectory.csv")
    assert traj[0] == ["t", "node", "theta", "phi", "mu", "u"]
    diag = _rows(out / "diagnostics.csv")
    assert diag[0] == ["t", "conserved_total", "energy", "min_theta", "fp_iters", "max_ratio",
                       "slack_a15", "slack_a2", "slack_a13"]
    assert len(diag) == 1 + 51
    data = np.array([[float(x) for x in r] for r in traj[1:]])
    assert data.shape == (51 * 33, 6)
    for col in (2, 3, 4, 5):
        assert np.ptp(data[:, col]) <= 1e-10
    summary = json.loads((out / "summary.json").read_text())
    assert summary["completed"] is True
    assert summary["steps_done"] == 50
    assert summary["bounds"]["dphi_L2Vstar"] <= 1e-20


def test_reals_have_17_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert float(cli.fmt(1 / 3)) == 1 / 3
    assert cli.fmt(3) == "3"


def test_out_precedence(stationary_cfg, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    env = tmp_path / "from_env"
    monkeypatch.setenv("ENTROFLOW_OUT", str(env))
    assert cli.main(["run", "--config", str(stationary_cfg)]) == 0
    assert (env / "trajectory.csv").exists()
    flag = tmp_path / "from_flag"
    assert cli.main(["run", "--config", str(stationary_cfg), "--out", str(flag)]) == 0
    assert (flag / "summary.json").exists()
    assert not (tmp_path / "trajectory.csv").exists()


def test_missing_file(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_guard_violation_names_entry(tmp_path, capsys):
    path = tmp_path / "big.cfg"
    path.write_text(presets.get("guard").replace("time.N = 100", "time.N = 10"))
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "latent_heat" in err and "h0" in err
    assert not (tmp_path / "trajectory.csv").exists()


def test_usage_errors():
    assert cli.main(["run"]) == 1
    assert cli.main(["sweep", "--config", "x", "--param", "gamma", "--levels", "2"]) == 1
    assert cli.main(["frobnicate"]) == 1


def test_step_failure_exit(stationary_cfg, tmp_path, monkeypatch, capsys):
    from entroflow import stepper

    def boom(problem, st, h):
        raise stepper.StepFailure("forced")

    monkeypatch.setattr(stepper, "_single_step", boom)
    assert cli.main(["run", "--config", str(stationary_cfg), "--out", str(tmp_path)]) == 2
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["completed"] is False and summary["failure"]["step"] == 1


def test_sweep_stationary(stationary_cfg, tmp_path):
    out = tmp_path / "sweep"
    assert cli.main(["sweep", "--config", str(stationary_cfg), "--param", "h", "--levels", "3",
                     "--out", str(out)]) == 0
    rows = _rows(out / "sweep.csv")
    assert rows[0] == cli.SWEEP_HEADER
    pairs = [r for r in rows[1:] if r[0] == "pair"]
    assert len(pairs) == 2
    for r in pairs:
        assert all(abs(float(x)) <= 1e-12 for x in r[6:11])


def test_sweep_rejects_before_running(stationary_cfg, tmp_path, capsys):
    assert cli.main(["sweep", "--config", str(stationary_cfg), "--param", "eps", "--levels", "2",
                     "--out", str(tmp_path)]) == 1
    assert "latent_heat" in capsys.readouterr().err
    assert not (tmp_path / "sweep.csv").exists()


def test_check_negative_control(capsys):
    assert cli.main(["check", "--slack-tol", "-1"]) == 3
    assert "slack_a" in capsys.readouterr().err


def test_oracle_is_reproducible(capsys):
    assert cli.main(["oracle", "--seed", "7", "--cases", "3"]) == 0
    first = capsys.readouterr().out
    assert cli.main(["oracle", "--seed", "7", "--cases", "3"]) == 0
    assert capsys.readouterr().out == first


def test_preset_listing(capsys):
    assert cli.main(["preset"]) == 0
    assert "stationary" in capsys.readouterr().out.split()
    assert cli.main(["preset", "stationary"]) == 0
    assert capsys.readouterr().out == presets.get("stationary")
    assert cli.main(["preset", "nothing"]) == 1
