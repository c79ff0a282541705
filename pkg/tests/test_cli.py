import json

import pytest

from ellipcov.bench import get_preset
from ellipcov.cli import main
from ellipcov.conic import read_problem, solve


def test_run_smoke_to_stdout(capsys):
    assert main(["run", "--preset", "smoke"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "estimator,n,trials,mse_mean,mse_median,mse_stderr,failures"
    assert out[1].startswith("sample,4,2,")


def test_run_config_json(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(get_preset("smoke").to_dict()))
    out = tmp_path / "out.json"
    assert main(["run", "--config", str(cfg), "--format", "json", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["rows"][0]["trials"] == 2


def test_run_threads_match_serial(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--preset", "smoke", "--out", str(a)]) == 0
    assert main(["run", "--preset", "smoke", "--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_debug_dumps_readable_problem(tmp_path, capsys):
    path = tmp_path / "prob.txt"
    assert main(["solve-debug", "--preset", "smoke", "--out", str(path), "--solve"]) == 0
    assert "status=optimal" in capsys.readouterr().out
    prob = read_problem(path)
    assert set(prob.var_map) >= {"C", "d", "t"}
    assert solve(prob).status == "optimal"


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


@pytest.mark.parametrize("argv", [
    ["run", "--config", "/nonexistent/cfg.json"],
    ["run", "--preset", "smoke", "--config", "x.json"],
])
def test_hard_failures_exit_nonzero(argv, capsys):
    assert main(argv) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_config_content(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"p": 3, "target": {"kind": "toeplitz", "rho": 0.5},
                               "structure": {"kind": "banded"}, "n_grid": [4], "trials": 1}))
    assert main(["run", "--config", str(cfg)]) == 1
    assert "bandwidth" in capsys.readouterr().err
