"""
Drivers for pointwise and profile runs

Both produce a Report; profile runs also write one CSV per field. Outputs are
deterministic for a fixed configuration and seed.
"""

import json
import logging
import time
from pathlib import Path
from typing import List, Tuple

import numpy as np
import pandas as pd

from cli.report import CheckRecord, Report
from cli.settings import RunConfig
from cli.suites import random_cases, resolve_suites, run_suite
from emcheck.catalog import INHOMOGENEOUS, ExampleField, catalog, get_example
from emcheck.config import SlackPolicy, Tolerances
from emcheck.integrate import RadialProfile, inhomogeneous_profile, theta_profile, ymh_identity_and_profile
from emcheck.manifold import ModelSpace

logger = logging.getLogger(__name__)

RANDOM_EXAMPLE = "random"
CSV_FLOAT_FORMAT = "%.17g"


def run_pointwise(config: RunConfig) -> Report:
    """
    Run the selected pointwise suites

    Raises:
        UsageError: unknown suite or example
        StandingAssumptionError: configured n <= kp
    """
    suites = resolve_suites(config.selected_suites)
    if config.k is not None or config.p is not None or config.space is not None:
        config.energy_config(ModelSpace.euclidean(4), 1, 2.0)
    report = Report(kind="pointwise")
    for name in suites:
        report.records.extend(run_suite(name, config))
    logger.info(f"Pointwise run finished: {len(report.records)} checks, passed={report.passed}")
    return report


def _profile_targets(config: RunConfig) -> List[Tuple[str, object]]:
    names = config.examples or [entry.name for entry in catalog()]
    targets = []
    for name in names:
        if name == RANDOM_EXAMPLE:
            default = ModelSpace.euclidean(5)
            config.energy_config(default, 1, 2.0)
            targets.append((name, None))
        else:
            targets.append((name, get_example(name)))
    return targets


def _random_profile(config: RunConfig, radii: np.ndarray) -> RadialProfile:
    rng = np.random.default_rng(config.seed)
    case = random_cases(config.with_overrides(space=config.space or {"kind": "euclidean", "dim": 5}), rng)[0]
    center = np.asarray(config.center, dtype=float) if config.center else case.space.origin()
    return theta_profile(case.cfg, case.space, case.conn, case.psi, center, radii, Lambda=0.0,
                         spec=config.quadrature_spec(), with_identity=config.with_identity)


def profile_for(example: ExampleField, config: RunConfig) -> RadialProfile:
    center = np.asarray(config.center, dtype=float) if config.center else example.center
    radii = config.radii.values() if config.radii else example.radii
    spec = config.quadrature_spec()
    slack = SlackPolicy()
    if example.pair is not None:
        return ymh_identity_and_profile(example.pair, center, radii, example.Lambda, spec, slack,
                                        with_identity=config.with_identity)
    if INHOMOGENEOUS in example.tags:
        return inhomogeneous_profile(example.cfg, example.space, example.connection, example.psi, center, radii,
                                     example.gamma, example.Lambda, spec, slack)
    return theta_profile(example.cfg, example.space, example.connection, example.psi, center, radii,
                         example.Lambda, spec, slack, with_identity=config.with_identity)


def profile_records(name: str, profile: RadialProfile, runtime: float) -> List[CheckRecord]:
    drops = [v.first_value - v.second_value for v in profile.violations]
    records = [
        CheckRecord(
            name=f"monotone[{name}]",
            max_residual=max(drops, default=0.0),
            tolerance=0.0,
            passed=profile.monotone,
            runtime=runtime,
            detail=f"{len(profile.violations)} violating pairs over {profile.radii.size} radii",
        )
    ]
    if profile.identity_residual is not None:
        tolerances = Tolerances()
        curved = profile.space_label.startswith("H")
        tolerance = tolerances.identity_curved if curved else tolerances.identity_flat
        worst = float(np.max(profile.identity_residual))
        passed = worst <= tolerance
        if not passed and profile.inconclusive:
            logger.warning(f"{name}: identity residual {worst:.3e} with inconclusive quadrature")
            passed = True
        records.append(
            CheckRecord(
                name=f"identity[{name}]",
                max_residual=worst,
                tolerance=tolerance,
                passed=passed,
                runtime=runtime,
                inconclusive=profile.inconclusive,
            )
        )
    return records


def profile_frame(profile: RadialProfile) -> pd.DataFrame:
    return pd.DataFrame(profile.columns())


def write_profile_csv(profile: RadialProfile, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    profile_frame(profile).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return path


def read_profile_csv(path: Path) -> pd.DataFrame:
    """Read a profile CSV back with exact float round-tripping"""
    return pd.read_csv(path, float_precision="round_trip")


def run_profile(config: RunConfig) -> Report:
    """
    Compute monotone profiles and write one CSV per field under ``config.out``

    Raises:
        UsageError: unknown example
        StandingAssumptionError: n <= kp for a random-field profile
    """
    targets = _profile_targets(config)
    report = Report(kind="profile")
    for name, example in targets:
        started = time.perf_counter()
        if example is None:
            radii = config.radii.values() if config.radii else np.linspace(0.2, 2.0, 20)
            profile = _random_profile(config, radii)
        else:
            logger.info(f"Profiling {example.name} on {example.space.label}")
            profile = profile_for(example, config)
        runtime = time.perf_counter() - started
        path = write_profile_csv(profile, Path(config.out) / f"profile_{name}.csv")
        report.profiles[name] = profile
        report.outputs[name] = path.name
        report.records.extend(profile_records(name, profile, runtime))
    write_summary(report, Path(config.out) / "summary.json", config.include_runtime)
    return report


def write_summary(report: Report, path: Path, include_runtime: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.summary(include_runtime), f, indent=2, sort_keys=True)
        f.write("\n")
    return path
