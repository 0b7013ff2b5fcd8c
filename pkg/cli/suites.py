"""
Pointwise check suites

Each suite samples points, evaluates one identity and returns CheckRecords.
Suites draw from their own seeded generator so the set of selected suites
does not change any individual result.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from cli.report import CheckRecord, residual_record
from cli.settings import SUITES, RunConfig
from emcheck.calculus import Box, adjointness_residual
from emcheck.catalog import HARMONIC, ExampleField, catalog, get_example
from emcheck.config import EnergyConfig, Tolerances
from emcheck.errors import UsageError
from emcheck.forms import BundleForm, ConnectionField, bump_form, polynomial_connection, polynomial_form
from emcheck.manifold import ModelSpace, metric_jet
from emcheck.stress import (
    contraction_divergence_residual,
    div_stress_direct,
    div_stress_identity,
    energy_density,
    metric_variation_residual,
    random_symmetric_tensor_field,
    random_vector_field,
    stress_tensor,
    trace,
)
from emcheck.ymh import (
    GaugeField,
    LieAlgebraAction,
    YMHPair,
    higgs_field,
    odot,
    ymh_density,
    ymh_div_stress,
    ymh_stress,
    ymh_trace_expected,
    ymhe_residual,
)

logger = logging.getLogger(__name__)

TOLERANCES = Tolerances()
RANDOM_RANK = 2


@dataclass(frozen=True)
class RandomCase:
    """A random polynomial field with a random connection on one space"""
    label: str
    space: ModelSpace
    cfg: EnergyConfig
    psi: BundleForm
    conn: ConnectionField

    @property
    def curved(self) -> bool:
        return self.space.is_hyperbolic


def sample_points(space: ModelSpace, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform points in a unit box around the space's origin, y in [0.5, 1.5] on H^n"""
    if space.is_hyperbolic:
        horizontal = rng.uniform(-0.5, 0.5, size=(count, space.dim - 1))
        y = rng.uniform(0.5, 1.5, size=(count, 1))
        return np.concatenate([horizontal, y], axis=-1)
    return rng.uniform(-1.0, 1.0, size=(count, space.dim))


def random_cases(config: RunConfig, rng: np.random.Generator) -> List[RandomCase]:
    """Configured (space, k, p) if given, otherwise (R^4, k=2, p=3) and (H^3, k=1, p=2.5)"""
    if config.space is not None or config.k is not None or config.p is not None:
        default = ModelSpace.euclidean(4)
        specs = [(config.model_space(default), config.energy_config(default, 1, 2.0))]
    else:
        specs = [
            (ModelSpace.euclidean(4), EnergyConfig(p=3.0, k=2, n=4)),
            (ModelSpace.hyperbolic(3, 1.0), EnergyConfig(p=2.5, k=1, n=3)),
        ]
    cases = []
    for space, cfg in specs:
        psi = polynomial_form(space, cfg.k, RANDOM_RANK, rng)
        conn = polynomial_connection(space, RANDOM_RANK, rng)
        cases.append(RandomCase(f"{space.label},k={cfg.k},p={cfg.p:g}", space, cfg, psi, conn))
    return cases


def selected_examples(config: RunConfig, default: Callable[[ExampleField], bool]) -> List[ExampleField]:
    if config.examples:
        return [get_example(name) for name in config.examples]
    return [entry for entry in catalog() if default(entry)]


def _relative_gap(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(first), initial=0.0)))
    return np.abs(first - second) / scale


def route_equivalence(config: RunConfig, rng: np.random.Generator) -> List[CheckRecord]:
    records = []
    for case in random_cases(config, rng):
        started = time.perf_counter()
        x = sample_points(case.space, rng, 2 * config.points)
        direct = div_stress_direct(case.cfg, case.space, case.conn, case.psi, x)
        identity = div_stress_identity(case.cfg, case.space, case.conn, case.psi, x)
        tolerance = TOLERANCES.route_curved if case.curved else TOLERANCES.route_flat
        records.append(residual_record(f"route-equivalence[{case.label}]", _relative_gap(direct, identity),
                                       tolerance, started))
    return records


def trace_identity(config: RunConfig, rng: np.random.Generator) -> List[CheckRecord]:
    records = []
    for case in random_cases(config, rng):
        started = time.perf_counter()
        x = sample_points(case.space, rng, config.points)
        T = stress_tensor(case.cfg, case.space, case.conn, case.psi, x)
        e = energy_density(case.cfg, case.space, case.psi, x)
        residual = np.abs(trace(case.space, x, T) - case.cfg.scaling_exponent * e) / (1.0 + np.abs(e))
        records.append(residual_record(f"trace[{case.label}]", residual, TOLERANCES.trace, started))
    return records


def contraction_rule(config: RunConfig, rng: np.random.Generator) -> List[CheckRecord]:
    spaces = [config.space.build()] if config.space is not None else [
        ModelSpace.euclidean(4), ModelSpace.hyperbolic(3, 1.0)
    ]
    records = []
    for space in spaces:
        started = time.perf_counter()
        S = random_symmetric_tensor_field(space, rng)
        X = random_vector_field(space, rng)
        x = sample_points(space, rng, 2 * config.points)
        tolerance = TOLERANCES.contraction_curved if space.is_hyperbolic else TOLERANCES.contraction_flat
        records.append(residual_record(f"contraction[{space.label}]",
                                       contraction_divergence_residual(space, S, X, x), tolerance, started))
    return records


def metric_variation(config: RunConfig, rng: np.random.Generator) -> List[CheckRecord]:
    records = []
    for case in random_cases(config, rng):
        started = time.perf_counter()
        x = sample_points(case.space, rng, config.points)
        h = 0.1 * rng.normal(size=x.shape[:-1] + (case.space.dim, case.space.dim))
        h = 0.5 * (h + np.swapaxes(h, -1, -2))
        residual = metric_variation_residual(case.cfg, case.space, case.conn, case.psi, x, h)
        records.append(residual_record(f"metric-variation[{case.label}]", residual,
                                       TOLERANCES.metric_variation, started))
    return records


def _covector_norm(space: ModelSpace, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    ginv = metric_jet(space, x).ginv
    return np.sqrt(np.maximum(np.einsum("...i,...ij,...j->...", v, ginv, v), 0.0))


def conservation(config: RunConfig, rng: np.random.Generator) -> List[CheckRecord]:
    records = []
    for example in selected_examples(config, lambda entry: HARMONIC in entry.tags or entry.is_pair):
        started = time.perf_counter()
        x = example.sample(rng, config.points)
        if example.pair is not None:
            div_T = ymh_div_stress(example.pair, x).direct
            tolerance = TOLERANCES.ymh_conservation
        else:
            div_T = div_stress_direct(example.cfg, example.space, example.connection, example.psi, x)
            tolerance = TOLERANCES.conservation
        records.append(residual_record(f"conservation[{example.name}]",
                                       _covector_norm(example.space, x, div_T), tolerance, started))
    return records


def _random_pair(rng: np.random.Generator) -> YMHPair:
    space = ModelSpace.euclidean(5)
    action = LieAlgebraAction.so3()
    return YMHPair(space, GaugeField.polynomial(space, action, rng), higgs_field(space, action.dim_V, rng),
                   name="random")


def ymh_checks(config: RunConfig, rng: np.random.Generator) -> List[CheckRecord]:
    records = []
    for example in selected_examples(config, lambda entry: entry.is_pair):
        if example.pair is None:
            continue
        started = time.perf_counter()
        x = example.sample(rng, config.points)
        first, second = ymhe_residual(example.pair, x)
        records.append(residual_record(f"ymhe[{example.name}]", np.maximum(first, second),
                                       TOLERANCES.ymhe, started))

    pair = _random_pair(rng)
    x = sample_points(pair.space, rng, config.points)

    started = time.perf_counter()
    records.append(residual_record("ymh-route-equivalence[random]", ymh_div_stress(pair, x).relative_gap(),
                                   TOLERANCES.ymh_route, started))

    started = time.perf_counter()
    expected = ymh_trace_expected(pair, x)
    residual = np.abs(trace(pair.space, x, ymh_stress(pair, x)) - expected) / (1.0 + np.abs(ymh_density(pair, x)))
    records.append(residual_record("ymh-trace[random]", residual, TOLERANCES.trace, started))

    started = time.perf_counter()
    action = pair.action
    e1 = rng.normal(size=(config.points, action.dim_V))
    e2 = rng.normal(size=(config.points, action.dim_V, 1))
    xi = rng.normal(size=(config.points, action.dim_g))
    lhs = np.einsum("...a,...a->...", xi, odot(action, e1, e2)[..., 0])
    rhs = np.einsum("...a,avw,...w,...v->...", xi, action.basis, e1, e2[..., 0])
    records.append(residual_record("odot-adjointness", lhs - rhs, TOLERANCES.odot, started))
    return records


def adjointness(config: RunConfig, rng: np.random.Generator) -> List[CheckRecord]:
    spaces = [config.space.build()] if config.space is not None else [
        ModelSpace.euclidean(3), ModelSpace.hyperbolic(3, 1.0)
    ]
    records = []
    for space in spaces:
        started = time.perf_counter()
        center = space.origin()
        psi1 = bump_form(polynomial_form(space, 0, RANDOM_RANK, rng), center, 0.5)
        psi2 = bump_form(polynomial_form(space, 1, RANDOM_RANK, rng), center, 0.5)
        conn = polynomial_connection(space, RANDOM_RANK, rng)
        residual = adjointness_residual(space, conn, psi1, psi2, Box.around(center, 0.6), nodes=48)
        records.append(residual_record(f"adjointness[{space.label}]", residual, TOLERANCES.adjointness, started))
    return records


SUITE_FUNCTIONS: Dict[str, Callable[[RunConfig, np.random.Generator], List[CheckRecord]]] = {
    "route-equivalence": route_equivalence,
    "trace": trace_identity,
    "contraction": contraction_rule,
    "metric-variation": metric_variation,
    "conservation": conservation,
    "ymhe": ymh_checks,
    "adjointness": adjointness,
}


def resolve_suites(names: Sequence[str]) -> List[str]:
    """
    Raises:
        UsageError: an unknown suite name; the message lists the available suites
    """
    unknown = [name for name in names if name not in SUITE_FUNCTIONS]
    if unknown:
        raise UsageError(f"unknown suite '{unknown[0]}'; choose from: all, {', '.join(SUITES)}",
                         choices=("all",) + SUITES)
    return list(names)


def suite_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, SUITES.index(name)])


def run_suite(name: str, config: RunConfig, rng: Optional[np.random.Generator] = None) -> List[CheckRecord]:
    rng = rng or suite_rng(config.seed, name)
    logger.info(f"Running suite {name}")
    return SUITE_FUNCTIONS[name](config, rng)
