"""Example catalog: lookup, tag verification and supplied jets"""

import numpy as np
import pytest

from emcheck.catalog import (
    CLOSED,
    COCLOSED,
    HARMONIC,
    INHOMOGENEOUS,
    REGISTRATION_TOLERANCE,
    YMH_PAIR,
    catalog,
    example_names,
    get_example,
    jet_selftest,
    verify_tags,
)
from emcheck.config import EnergyConfig, Tolerances
from emcheck.errors import RegistrationError, UsageError
from emcheck.stress import div_stress_direct

NAMES = [entry.name for entry in catalog()]


def test_names_and_keys_are_unique():
    keys = [entry.key for entry in catalog()]
    assert len(set(NAMES)) == len(NAMES)
    assert len(set(keys)) == len(keys)
    assert example_names() == tuple(NAMES)


def test_lookup_by_name_or_key():
    assert get_example("b").name == "dx1"
    assert get_example("dx1") is get_example("b")


def test_unknown_example_lists_the_choices():
    with pytest.raises(UsageError) as info:
        get_example("nope")
    assert "dx1" in info.value.choices
    assert "dx1" in str(info.value)


@pytest.mark.parametrize("name", NAMES)
def test_tags_hold_on_fresh_samples(name):
    example = get_example(name)
    residuals = verify_tags(example, np.random.default_rng(11))
    assert all(value <= REGISTRATION_TOLERANCE for value in residuals.values())
    if HARMONIC in example.tags:
        assert {CLOSED, COCLOSED} <= set(residuals)
    if example.is_pair:
        assert set(residuals) == {YMH_PAIR}


@pytest.mark.parametrize("name", NAMES)
def test_supplied_jets_match_finite_differences(name):
    assert jet_selftest(get_example(name), np.random.default_rng(5)) < 1e-4


@pytest.mark.parametrize("name", NAMES)
def test_samples_lie_in_the_valid_region(name, rng):
    example = get_example(name)
    points = example.sample(rng, 50)
    assert points.shape == (50, example.space.dim)
    assert np.all(example.valid_region(points))


def test_sampler_outside_region_is_rejected():
    example = get_example("radial-p-harmonic")
    broken = type(example)(**{**example.__dict__, "sampler": lambda rng, count: np.zeros((count, 4))})
    with pytest.raises(RegistrationError):
        broken.sample(np.random.default_rng(0), 3)


def test_broken_tag_is_reported():
    # d|x|^(-1/2) is 3-harmonic on R^4 but not 2-harmonic
    example = get_example("radial-p-harmonic")
    mislabeled = type(example)(**{**example.__dict__, "cfg": EnergyConfig(2.0, 1, 4)})
    with pytest.raises(RegistrationError):
        verify_tags(mislabeled)


@pytest.mark.parametrize("name", [entry.name for entry in catalog() if HARMONIC in entry.tags])
def test_harmonic_entries_conserve_stress(name, rng):
    example = get_example(name)
    x = example.sample(rng, 40)
    div_T = div_stress_direct(example.cfg, example.space, example.connection, example.psi, x)
    assert np.max(np.abs(div_T)) < Tolerances().conservation


def test_inhomogeneous_entry_carries_gamma():
    example = get_example("h")
    assert INHOMOGENEOUS in example.tags
    assert example.gamma > 0
