"""CLI subcommands, output files, and exit codes.

Everything goes through main(argv) so the tests exercise exactly what the
installed entry point runs; fast cases shorten t_end via --set.
"""

import json

import numpy as np
import pytest

from armtrack.cli import CSV_COLUMNS, main

FAST = ["--set", "run.t_end=0.5"]


def run_cli(*argv):
    return main(list(argv))


def test_run_writes_output_bundle(tmp_path, capsys):
    out = tmp_path / "out"
    code = run_cli("run", "--config", "inverse_jacobian", *FAST,
                   "--out", str(out))
    assert code == 0
    for name in ("log.csv", "metrics.json", "config.cfg",
                 "error_trace.csv", "torque_trace.csv"):
        assert (out / name).is_file(), name
    summary = capsys.readouterr().out
    assert "completed" in summary and "steady_state_error" in summary

    header, first, *_ = (out / "log.csv").read_text().splitlines()
    assert header == CSV_COLUMNS
    assert len(first.split(",")) == len(CSV_COLUMNS.split(","))
    # full float round trip: the t=0 row starts exactly at zero error offset
    row = np.array([float(v) for v in first.split(",")])
    assert row[0] == 0.0

    meta = json.loads((out / "metrics.json").read_text())
    assert meta["mode"] == "inverse_jacobian"
    assert meta["completed"] is True
    assert isinstance(meta["s_squared_integral"], float)

    # the echoed config reloads to the very same run
    from armtrack.config import load_config
    cfg = load_config(out / "config.cfg")
    assert cfg.t_end == 0.5


def test_run_quiet_suppresses_output(tmp_path, capsys):
    code = run_cli("run", "--config", "inverse_jacobian", *FAST,
                   "--out", str(tmp_path / "q"), "--quiet")
    assert code == 0
    assert capsys.readouterr().out == ""


def test_run_exit_code_on_config_error(tmp_path, capsys):
    code = run_cli("run", "--config", "no_such_config",
                   "--out", str(tmp_path / "x"))
    assert code == 2
    assert "config error" in capsys.readouterr().err

    code = run_cli("run", "--config", "inverse_jacobian",
                   "--set", "gains.alpha=-1", "--out", str(tmp_path / "y"))
    assert code == 2


def test_run_exit_code_on_divergence(tmp_path, capsys):
    # a tiny divergence limit trips immediately; partial outputs still land
    out = tmp_path / "div"
    code = run_cli("run", "--config", "inverse_jacobian", *FAST,
                   "--set", "numerics.divergence_limit=0.01", "--out", str(out))
    assert code == 4
    assert "ABORTED" in capsys.readouterr().err
    assert (out / "metrics.json").is_file()
    meta = json.loads((out / "metrics.json").read_text())
    assert meta["completed"] is False
    assert "exceeded" in meta["abort_reason"]


def test_run_exit_code_on_singularity(tmp_path, capsys):
    out = tmp_path / "sing"
    code = run_cli("run", "--config", "inverse_jacobian", *FAST,
                   "--set", "estimates.a_k0=[2.0,0.5,0.1]",
                   "--set", "start.q0=[0.3,-0.19739555984988078]",
                   "--out", str(out))
    assert code == 3
    meta = json.loads((out / "metrics.json").read_text())
    assert meta["completed"] is False


def test_compare_writes_table_and_subruns(tmp_path, capsys):
    out = tmp_path / "cmp"
    code = run_cli("compare", "--config", "inverse_jacobian",
                   "--config", "transpose_baseline", *FAST, "--out", str(out))
    assert code == 0
    table = (out / "compare.csv").read_text().splitlines()
    assert table[0].startswith("label,mode,completed,steady_state_error")
    assert len(table) == 3
    assert (out / "inverse_jacobian" / "log.csv").is_file()
    assert (out / "transpose_baseline" / "log.csv").is_file()
    printed = capsys.readouterr().out
    assert "sse[m]" in printed


def test_compare_needs_two_configs(tmp_path):
    code = run_cli("compare", "--config", "inverse_jacobian",
                   "--out", str(tmp_path / "c1"))
    assert code == 2


def test_compare_rejects_mismatched_trajectories(tmp_path, capsys):
    path = tmp_path / "other.cfg"
    path.write_text("trajectory.radius = 0.4\n")
    code = run_cli("compare", "--config", "inverse_jacobian",
                   "--config", str(path), "--out", str(tmp_path / "c2"))
    assert code == 2
    assert "identical trajectories" in capsys.readouterr().err


def test_compare_duplicate_labels_get_suffixes(tmp_path):
    out = tmp_path / "dup"
    code = run_cli("compare", "--config", "inverse_jacobian",
                   "--config", "inverse_jacobian", *FAST, "--out", str(out))
    assert code == 0
    assert (out / "inverse_jacobian").is_dir()
    assert (out / "inverse_jacobian_2").is_dir()


def test_sweep_varies_one_key(tmp_path, capsys):
    out = tmp_path / "swp"
    code = run_cli("sweep", "--config", "velocity_command", *FAST,
                   "--key", "servo.gain", "--values", "200,1000",
                   "--out", str(out))
    assert code == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("servo.gain,")
    assert len(rows) == 3
    assert (out / "servo.gain=200" / "metrics.json").is_file()
    assert (out / "servo.gain=1000" / "metrics.json").is_file()
    # higher servo gain tracks the commanded velocity more tightly
    m200 = json.loads((out / "servo.gain=200" / "metrics.json").read_text())
    m1000 = json.loads((out / "servo.gain=1000" / "metrics.json").read_text())
    assert m1000["s_squared_integral"] < m200["s_squared_integral"]


def test_sweep_empty_values_rejected(tmp_path):
    code = run_cli("sweep", "--config", "inverse_jacobian",
                   "--key", "gains.alpha", "--values", " , ",
                   "--out", str(tmp_path / "s2"))
    assert code == 2


def test_validate_prints_one_line_per_check(capsys):
    code = run_cli("validate")
    out = capsys.readouterr().out.strip().splitlines()
    assert code == 0
    assert len(out) == 6
    assert all(line.startswith("PASS ") for line in out)
    assert any("kinematic-regressor-identity" in line for line in out)


def test_entry_point_installed():
    import shutil
    path = shutil.which("armtrack")
    assert path is not None
