"""Pointwise and profile drivers, CSV and summary outputs"""

import json

import numpy as np
import pytest

from cli.runner import profile_records, read_profile_csv, run_pointwise, run_profile, write_profile_csv
from cli.settings import RadiusGrid, RunConfig, SpaceSettings
from cli.suites import random_cases, resolve_suites, suite_rng
from emcheck.config import EnergyConfig
from emcheck.errors import StandingAssumptionError, UsageError
from emcheck.forms import constant_form
from emcheck.integrate import RadialProfile, liouville_ratio_check, theta_profile
from emcheck.manifold import ModelSpace

SMALL_RADII = RadiusGrid(min=0.5, max=1.0, count=3)


def test_csv_round_trip_is_exact(tmp_path, r3):
    psi = constant_form(r3, 1, [[1.0, 0.3, 0.0]])
    profile = theta_profile(EnergyConfig(2.0, 1, 3), r3, None, psi, r3.origin(), [0.3, 0.7, 1.1], 0.2,
                            with_identity=True)
    path = write_profile_csv(profile, tmp_path / "nested" / "profile.csv")
    frame = read_profile_csv(path)
    assert list(frame.columns) == list(profile.columns())
    for name, values in profile.columns().items():
        np.testing.assert_array_equal(frame[name].to_numpy(), values)


def test_profile_run_is_deterministic(tmp_path):
    outputs = []
    for run in ("first", "second"):
        config = RunConfig(examples=["b"], radii=SMALL_RADII, out=tmp_path / run)
        report = run_profile(config)
        assert report.passed
        outputs.append(((tmp_path / run / "summary.json").read_bytes(),
                        (tmp_path / run / "profile_b.csv").read_bytes()))
    assert outputs[0] == outputs[1]
    summary = json.loads(outputs[0][0])
    assert summary["profiles"]["b"]["output"] == "profile_b.csv"
    assert [record["name"] for record in summary["records"]] == ["monotone[b]", "identity[b]"]
    assert "runtime" not in summary["records"][0]


def test_runtime_is_opt_in(tmp_path):
    config = RunConfig(examples=["dx1"], radii=SMALL_RADII, out=tmp_path, with_identity=False,
                       include_runtime=True)
    run_profile(config)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert "runtime" in summary["records"][0]


def test_random_profile(tmp_path):
    config = RunConfig(examples=["random"], space=SpaceSettings(kind="euclidean", dim=3), k=1, p=2.0,
                       radii=SMALL_RADII, out=tmp_path, with_identity=False)
    report = run_profile(config)
    assert "random" in report.profiles
    assert (tmp_path / "profile_random.csv").exists()


def test_random_profile_checks_standing_assumption(tmp_path):
    config = RunConfig(examples=["random"], space=SpaceSettings(kind="euclidean", dim=3), k=2, p=2.0,
                       out=tmp_path)
    with pytest.raises(StandingAssumptionError):
        run_profile(config)


def test_unknown_example_is_a_usage_error(tmp_path):
    with pytest.raises(UsageError):
        run_profile(RunConfig(examples=["nope"], out=tmp_path))


def test_violations_fail_the_monotone_record():
    values = np.array([2.0, 1.5, 1.0])
    profile = RadialProfile(label="falling", space_label="R^3", exponent=-1.0, Lambda=0.0,
                            radii=np.array([0.5, 1.0, 1.5]), raw_energy=values, theta=values,
                            boundary_term=np.zeros(3), bulk_term=np.zeros(3))
    profile.violations = liouville_ratio_check(profile)
    (record,) = profile_records("falling", profile, 0.0)
    assert not record.passed
    assert record.max_residual == pytest.approx(1.0)
    assert record.detail.startswith("3 violating pairs")


def test_pointwise_trace_suite():
    report = run_pointwise(RunConfig(suite="trace", points=10))
    assert report.passed
    assert [record.name.split("[")[0] for record in report.records] == ["trace", "trace"]


def test_pointwise_rejects_unknown_suite():
    with pytest.raises(UsageError) as info:
        run_pointwise(RunConfig(suite="bogus"))
    assert "trace" in info.value.choices
    assert resolve_suites(["trace", "ymhe"]) == ["trace", "ymhe"]


def test_suite_generators_do_not_depend_on_selection():
    first = suite_rng(3, "trace").normal(size=4)
    np.testing.assert_array_equal(first, suite_rng(3, "trace").normal(size=4))
    assert not np.array_equal(first, suite_rng(3, "conservation").normal(size=4))


def test_configured_random_case(rng):
    config = RunConfig(space=SpaceSettings(kind="hyperbolic", dim=4, kappa=0.5), k=1, p=3.0)
    (case,) = random_cases(config, rng)
    assert case.space == ModelSpace.hyperbolic(4, 0.5)
    assert (case.cfg.k, case.cfg.p, case.cfg.n) == (1, 3.0, 4)
    assert case.curved
