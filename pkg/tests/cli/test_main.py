"""Command-line surface"""

import json

import pandas as pd
import pytest
from click.testing import CliRunner

from cli.main import EXIT_FAILED, EXIT_USAGE, cli


@pytest.fixture
def runner():
    return CliRunner()


def test_catalog_lists_examples(runner):
    result = runner.invoke(cli, ["catalog"])
    assert result.exit_code == 0
    assert "dx1" in result.output
    assert "Example Catalog" in result.output


def test_version(runner):
    result = runner.invoke(cli, ["version"])
    assert result.exit_code == 0
    assert "emcheck version 0.1.0" in result.output


def test_unknown_suite_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(cli, ["pointwise", "--suite", "bogus", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_USAGE
    assert "unknown suite" in result.output


def test_unknown_example_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(cli, ["profile", "-e", "nope", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_USAGE


def test_standing_assumption_violation_fails(runner, tmp_path):
    result = runner.invoke(cli, ["pointwise", "--suite", "trace", "--space", "euclidean:3", "--kp", "2,2",
                                 "--out", str(tmp_path)])
    assert result.exit_code == EXIT_FAILED
    assert "kp" in result.output


def test_pointwise_writes_summary(runner, tmp_path):
    result = runner.invoke(cli, ["pointwise", "--suite", "trace", "--points", "10", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "pointwise_summary.json").read_text())
    assert summary["kind"] == "pointwise"
    assert summary["passed"] is True
    assert len(summary["records"]) == 2


def test_profile_writes_csv(runner, tmp_path):
    result = runner.invoke(cli, ["profile", "-e", "b", "--radii", "0.5:1:3", "--no-identity",
                                 "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(tmp_path / "profile_b.csv")
    assert list(frame.columns) == ["R", "raw_energy", "theta", "boundary_term", "bulk_term"]
    assert frame["R"].tolist() == [0.5, 0.75, 1.0]
    assert (tmp_path / "summary.json").exists()


def test_config_file_supplies_defaults(runner, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"suite": "trace", "points": 5, "out": str(tmp_path / "from-file")}))
    result = runner.invoke(cli, ["--config", str(config), "pointwise"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "from-file" / "pointwise_summary.json").exists()


def test_malformed_radii_fail(runner, tmp_path):
    result = runner.invoke(cli, ["profile", "-e", "b", "--radii", "1:0.5", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_FAILED
