import json
import os

import pytest

from cogniq.cli import main

SIM_CONFIG = {
    "r_a1": 1.0, "r_a2": 1.0, "r_b1": 1.0, "r_b2": 1.0,
    "gamma": 0.1, "schedule": "vanishing", "alpha0": 1.0,
    "horizon": 300, "num_runs": 6, "master_seed": 21,
}

MF_CONFIG = {"r_a1": 1.0, "r_a2": 1.0, "r_b1": 1.0, "r_b2": 1.0, "gamma": 0.1}


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_simulate_writes_expected_artifacts(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", SIM_CONFIG)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "delay_cdf.csv").exists()
    assert (out / "summary.json").exists()
    for i in range(6):
        assert (out / f"run_{i:04d}.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["num_runs"] == 6
    assert summary["completed"] + round(summary["censored_fraction"] * 6) == 6
    assert "simulate:" in capsys.readouterr().out


def test_simulate_save_runs_limits_trajectories(tmp_path):
    cfg = _write(tmp_path, "sim.json", {**SIM_CONFIG, "save_runs": 2})
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    assert (out / "run_0001.csv").exists()
    assert not (out / "run_0002.csv").exists()


def test_simulate_output_is_reproducible(tmp_path):
    cfg = _write(tmp_path, "sim.json", {**SIM_CONFIG, "save_runs": 3})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(out1), "--quiet"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out2), "--quiet"]) == 0
    for name in ("run_0000.csv", "run_0002.csv", "delay_cdf.csv", "summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_simulate_thread_count_does_not_change_output(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "sim.json", SIM_CONFIG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    monkeypatch.delenv("COGNIQ_THREADS", raising=False)
    assert main(["simulate", "--config", cfg, "--out", str(out1), "--quiet"]) == 0
    monkeypatch.setenv("COGNIQ_THREADS", "4")
    assert main(["simulate", "--config", cfg, "--out", str(out2), "--quiet"]) == 0
    for name in ("run_0003.csv", "delay_cdf.csv", "summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_bad_thread_env_rejected(tmp_path, monkeypatch, capsys):
    cfg = _write(tmp_path, "sim.json", SIM_CONFIG)
    monkeypatch.setenv("COGNIQ_THREADS", "many")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 2
    assert "COGNIQ_THREADS" in capsys.readouterr().err


def test_invalid_temperature_exits_with_diagnostic(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", {**SIM_CONFIG, "gamma": 0.0})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "temperature" in err


def test_unknown_config_key_named_in_error(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", {**SIM_CONFIG, "spice_level": 11})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "spice_level" in capsys.readouterr().err


def test_sweep_command(tmp_path):
    cfg = _write(tmp_path, "sweep.json", {
        **SIM_CONFIG, "num_runs": 10,
        "alpha0_grid": [0.5, 1.0], "gamma_grid": [0.1],
    })
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    assert (out / "delay_cdf_a0.5_g0.1.csv").exists()
    assert (out / "delay_cdf_a1_g0.1.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == {"alpha0=0.5,gamma=0.1", "alpha0=1,gamma=0.1"}


def test_sweep_requires_grids(tmp_path, capsys):
    cfg = _write(tmp_path, "sweep.json", {**SIM_CONFIG, "alpha0_grid": [1.0]})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "gamma_grid" in capsys.readouterr().err


def test_ode_command_writes_trace(tmp_path):
    cfg = _write(tmp_path, "ode.json", {**MF_CONFIG, "q0": [0.9, 0.1, 0.8, 0.2]})
    out = tmp_path / "out"
    assert main(["ode", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    lines = (out / "ode_trace.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("t,q_a1,")
    assert len(lines) > 10
    first = lines[1].split(",")
    assert float(first[0]) == 0.0
    assert first[9:13] == ["", "", "", ""]


def test_ode_command_signals_nonconvergence(tmp_path):
    cfg = _write(tmp_path, "ode.json", {
        **MF_CONFIG, "q0": [0.9, 0.1, 0.8, 0.2], "max_time": 0.1, "stop_tol": 1e-12,
    })
    assert main(["ode", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 1


def test_stationary_command(tmp_path):
    cfg = _write(tmp_path, "st.json", {**MF_CONFIG, "q0": [0.9, 0.1, 0.2, 0.8]})
    out = tmp_path / "out"
    assert main(["stationary", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    doc = json.loads((out / "stationary.json").read_text())
    assert doc["residual"] <= 1e-10
    assert set(doc) == {"q_a1", "q_a2", "q_b1", "q_b2", "iterations", "residual"}


def test_verify_command_passes_and_reports(tmp_path, capsys):
    cfg = _write(tmp_path, "v.json", {**MF_CONFIG, "num_points": 30})
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    assert len(lines) == 4 and all(l.startswith("PASS ") for l in lines)
    report = json.loads((out / "verify_report.json").read_text())
    assert all(entry["passed"] for entry in report.values())


def test_verify_detects_injected_fault(tmp_path, capsys):
    cfg = _write(tmp_path, "v.json", {**MF_CONFIG, "num_points": 30,
                                      "inject_fault": True})
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 1
    assert any(l.startswith("FAIL ") for l in capsys.readouterr().out.splitlines())
    report = json.loads((out / "verify_report.json").read_text())
    assert not all(entry["passed"] for entry in report.values())


def test_unwritable_output_directory_fails_cleanly(tmp_path, capsys):
    if os.geteuid() == 0:
        pytest.skip("permission bits do not bind as root")
    cfg = _write(tmp_path, "sim.json", SIM_CONFIG)
    blocked = tmp_path / "blocked"
    blocked.mkdir()
    blocked.chmod(0o500)
    try:
        code = main(["simulate", "--config", cfg,
                     "--out", str(blocked / "sub"), "--quiet"])
    finally:
        blocked.chmod(0o700)
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_fails_cleanly(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)])
    assert code == 2
    assert "error:" in capsys.readouterr().err
