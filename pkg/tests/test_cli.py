import csv
import json

import pytest
from click.testing import CliRunner

from kacsim import __version__
from kacsim.cli import cli


@pytest.fixture
def runner(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    return CliRunner()


def read_csv(path):
    with open(path, newline='') as f:
        return list(csv.DictReader(f))


def test_density_to_stdout(runner):
    result = runner.invoke(cli, ["density", "--curve", "limit", "--grid", "-5:5:0.1", "-i"])
    assert result.exit_code == 0, result.output
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "v,density"
    assert len(lines) == 102


def test_sample_writes_csv_and_json(runner, tmp_path):
    out = tmp_path / "runs" / "bird"
    result = runner.invoke(cli, [
        "sample", "--algorithm", "bird", "--n", "20", "--t", "2", "--replicates", "300",
        "--seed", "5", "--out", str(out), "-i",
    ])
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "runs" / "bird.csv")
    assert list(rows[0]) == ["bin_lo", "bin_hi", "count", "empirical_prob", "target_prob"]
    assert len(rows) == 100
    summary = json.loads((tmp_path / "runs" / "bird.json").read_text())
    assert summary["version"] == __version__
    assert summary["seed"] == 5
    assert summary["bins"] == "-5:5:0.1"
    assert summary["n_samples"] == 300
    assert 0 < summary["tvn"] < 1


def test_same_seed_gives_identical_files(runner, tmp_path):
    args = ["perfect", "--n", "10", "--replicates", "40", "--seed", "8", "-i"]
    assert runner.invoke(cli, args + ["--out", "a"]).exit_code == 0
    assert runner.invoke(cli, args + ["--out", "b"]).exit_code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_draws.csv").read_bytes() == (tmp_path / "b_draws.csv").read_bytes()
    draws = read_csv(tmp_path / "a_draws.csv")
    assert list(draws[0]) == ["replicate", "v1", "coupling_time", "final_diameter"]


def test_tail_file(runner, tmp_path):
    result = runner.invoke(cli, [
        "sample", "--algorithm", "oracle", "--t", "2", "--replicates", "1000",
        "--tail-from", "2.5", "--out", "tails.csv", "-i",
    ])
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "tails_tail.csv")
    assert "relative_error" in rows[0]
    assert len(rows) == 25


def test_compare_csv(runner, tmp_path):
    result = runner.invoke(cli, [
        "compare", "--algorithm", "poisson,oracle", "--n", "5,10", "--t", "2",
        "--replicates", "100", "--tvn-repeats", "2", "--out", "cmp", "-i",
    ])
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "cmp.csv")
    assert list(rows[0]) == ["algorithm", "N", "dt", "mean_tvn", "sd_tvn", "tvn_repeats"]
    assert [(r["algorithm"], r["N"]) for r in rows] == [
        ("poisson", "5"), ("poisson", "10"), ("oracle", "5"), ("oracle", "10"),
    ]


@pytest.mark.parametrize("args", [
    ["sample", "--algorithm", "nanbu", "--n", "5", "--t", "2", "--dt", "0.3"],
    ["sample", "--algorithm", "bird", "--n", "1", "--t", "2"],
    ["compare", "--lambda", "1.0", "--t", "2"],
    ["perfect", "--n", "10", "--epsilon", "-1"],
    ["sample", "--t", "2", "--bins", "0:1:0.3"],
])
def test_config_violations_exit_2(runner, args):
    result = runner.invoke(cli, args + ["-i"])
    assert result.exit_code == 2
    assert "Configuration error" in result.output


def test_config_file_and_flag_override(runner, tmp_path):
    (tmp_path / "run.env").write_text("COMMAND=sample\nALGORITHM=bird\nN=20\nT=2\nREPLICATES=50\n")
    result = runner.invoke(cli, ["sample", "--config", "run.env", "--replicates", "30", "--out", "r", "-i"])
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "r.json").read_text())
    assert summary["n_samples"] == 30
    assert summary["n_particles"] == 20


def test_missing_config_file_exit_2(runner):
    result = runner.invoke(cli, ["sample", "--config", "missing.env", "--t", "2"])
    assert result.exit_code == 2
