import json

import pytest
from click.testing import CliRunner

from main import buffdyn
from src.experiments.default_experiments import PRESETS

EST2 = """
[experiment]
kind = est2
id = cli_est2

[map.quadratic]
coefficients = 0, 1, 1

[family]
limit = quadratic
n_start = 8
n_stop = 24
n_step = 8
"""

FAILING_SUM_RULE = """
[experiment]
kind = sum_rule
id = cli_sum_rule

[map.quadratic]
coefficients = 0, 1, 1

[family]
limit = quadratic
n_start = 8
n_stop = 16
n_step = 8

[sum_rule]
envelope = 1e-12
n_min = 1
"""

ROTATION = """
[experiment]
kind = phase_portrait
id = cli_rotation

[phase_portrait]
form = linear
k = 1i
disk = 1
n_trajectories = 3
"""


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, name: str, text: str) -> str:
    path = tmp_path / f"{name}.ini"
    path.write_text(text)
    return str(path)


def test_run_passes(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(buffdyn, ["--out-dir", str(out), "run", write_config(tmp_path, "est2", EST2)])
    assert result.exit_code == 0, result.output
    assert "cli_est2: pass" in result.output
    assert json.loads((out / "cli_est2.json").read_text())["pass"] is True


def test_failed_check_exits_with_two(runner, tmp_path):
    config = write_config(tmp_path, "sum_rule", FAILING_SUM_RULE)
    result = runner.invoke(buffdyn, ["--out-dir", str(tmp_path / "out"), "run", config])
    assert result.exit_code == 2
    assert "FAIL" in result.output


def test_errors_exit_with_one(runner, tmp_path):
    result = runner.invoke(buffdyn, ["--out-dir", str(tmp_path / "out"), "run", str(tmp_path / "absent.ini")])
    assert result.exit_code == 1
    assert "error:" in result.output

    broken = write_config(tmp_path, "broken", "[experiment]\nkind = est2\n[map.a]\ncoefficients = 0, 1, 1\n")
    result = runner.invoke(buffdyn, ["--out-dir", str(tmp_path / "out"), "run", broken])
    assert result.exit_code == 1
    assert "[family]" in result.output


def test_subcommands_check_the_kind(runner, tmp_path):
    config = write_config(tmp_path, "est2", EST2)
    result = runner.invoke(buffdyn, ["--out-dir", str(tmp_path / "out"), "portrait", config])
    assert result.exit_code == 1
    assert "expected phase_portrait" in result.output


def test_portrait(runner, tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, "rotation", ROTATION)
    result = runner.invoke(buffdyn, ["--out-dir", str(out), "--threads", "2", "portrait", config])
    assert result.exit_code == 0, result.output
    assert (out / "cli_rotation_portrait.svg").exists()
    assert (out / "cli_rotation_samples.csv").exists()


def test_threads_from_the_environment(runner, tmp_path):
    config = write_config(tmp_path, "est2", EST2)
    result = runner.invoke(buffdyn, ["--out-dir", str(tmp_path / "out"), "run", config],
                           env={"BUFFDYN_THREADS": "0"})
    assert result.exit_code != 0
    assert "BUFFDYN_THREADS" in result.output or "--threads" in result.output


def test_presets(runner):
    result = runner.invoke(buffdyn, ["presets"])
    assert result.exit_code == 0
    listed = [line.split("\t")[0] for line in result.output.splitlines()]
    assert listed == sorted(PRESETS)
    assert "theorem_a_quadratic\ttheorem_a" in result.output.splitlines()
