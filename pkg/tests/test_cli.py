"""CLI subcommands end to end on tiny workloads."""

from pathlib import Path

import pytest

from sc_destim.cli import main
from sc_destim.config import config_to_toml, load_config
from test_config import BASIC, deep
from sc_destim.config import config_from_dict


@pytest.fixture()
def tiny_config(tmp_path):
    raw = deep(BASIC)
    raw["experiment"].update({"horizon": 300, "n_runs": 2, "seed": 5})
    path = tmp_path / "tiny.toml"
    path.write_text(config_to_toml(config_from_dict(raw)), encoding="utf-8")
    return str(path)


def test_run_subcommand(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["run", "-c", tiny_config, "-o", str(out), "--workers", "1"])
    assert rc == 0
    assert (out / "aggregate.csv").exists()
    assert "final aggregate MSE" in capsys.readouterr().out


def test_run_overrides(tiny_config, tmp_path):
    out = tmp_path / "o2"
    rc = main(
        ["run", "-c", tiny_config, "-o", str(out), "--runs", "1", "--horizon", "50",
         "--seed", "9", "--workers", "1"]
    )
    assert rc == 0
    text = (out / "aggregate.csv").read_text(encoding="utf-8")
    assert "# seed = 9" in text
    assert not (out / "run_1.csv").exists()


def test_sweep_subcommand(tiny_config, tmp_path, capsys):
    out = tmp_path / "sw"
    rc = main(
        ["sweep", "-c", tiny_config, "--nu", "0,1/9", "-o", str(out), "--workers", "1",
         "--horizon", "200"]
    )
    assert rc == 0
    assert (out / "comparison.csv").exists()
    printed = capsys.readouterr().out
    assert "nu = 0.0000" in printed and "nu = 0.1111" in printed


def test_consensus_subcommand(tmp_path, capsys):
    out = tmp_path / "cons.csv"
    rc = main(
        ["consensus", "--n", "5", "--topology", "ring", "--threshold", "2",
         "--alpha1", "1", "--gamma", "1", "--horizon", "2000", "--seed", "3",
         "-o", str(out)]
    )
    assert rc == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[2] == "k,max_deviation,mean_state"
    assert "final max deviation" in capsys.readouterr().out


def test_predict_subcommand(capsys):
    rc = main(["predict", "-c", "paper-sec7"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "h = 0.875" in out
    assert "certified exponent a" in out


def test_validate_pass_and_fail(tmp_path, capsys):
    assert main(["validate", "-c", "paper-sec7"]) == 0
    raw = deep(BASIC)
    raw["channels"]["gamma"] = 0.5
    bad = tmp_path / "bad.toml"
    bad.write_text(config_to_toml(config_from_dict(raw)), encoding="utf-8")
    rc = main(["validate", "-c", str(bad)])
    assert rc == 1
    assert "condition i" in capsys.readouterr().out


def test_run_refuses_invalid_config(tiny_config, tmp_path, capsys):
    raw = deep(BASIC)
    raw["channels"]["gamma"] = 0.5
    bad = tmp_path / "bad.toml"
    bad.write_text(config_to_toml(config_from_dict(raw)), encoding="utf-8")
    rc = main(["run", "-c", str(bad), "-o", str(tmp_path / "x"), "--workers", "1"])
    assert rc == 2
    assert "validation failed" in capsys.readouterr().err
    # --force overrides
    rc = main(
        ["run", "-c", str(bad), "-o", str(tmp_path / "y"), "--force", "--workers", "1",
         "--horizon", "50", "--runs", "1"]
    )
    assert rc == 0
