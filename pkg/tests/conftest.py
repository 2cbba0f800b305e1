"""
Fixtures for unit tests.
"""
# standard imports
from typing import Callable, Optional

# third party imports
import numpy as np
import pytest

# project imports
from biotbound.config.config import Config
from biotbound.model.pmf import AlphabetPmf, InjectionFamily, QuantizerFamily
from biotbound.model.scenario import AttackSpec, make_scenario


@pytest.fixture(name="baseline_config")
def fixture_baseline_config() -> Config:
    """
    Returns the shipped three-device config.
    """
    return Config.from_fixture("baseline")


@pytest.fixture(name="baseline_scenario")
def fixture_baseline_scenario(baseline_config):
    """
    N = 3, C0 = {1, 2}, Ca = {3}, L = 5, L0 = 4, theta = 2.
    """
    return baseline_config.get_scenario()


@pytest.fixture(name="baseline_pmf")
def fixture_baseline_pmf(baseline_config):
    """
    Calibrated honest pmf at theta = 2.
    """
    return baseline_config.get_honest_pmf()


@pytest.fixture(name="baseline_family")
def fixture_baseline_family(baseline_config):
    """
    Calibrated injection family.
    """
    return baseline_config.get_attack_family()


@pytest.fixture(name="baseline_attack")
def fixture_baseline_attack(baseline_config):
    """
    L_a = 4, xi = 2.5, P(L_a) = 0.09.
    """
    return baseline_config.get_attack()


@pytest.fixture(name="small_scenario")
def fixture_small_scenario():
    """
    One honest and one malicious device, L = 3, L0 = 2: |R| = 64.
    """
    return make_scenario(1, 1, 3, 2, theta=0.5)


@pytest.fixture(name="small_family")
def fixture_small_family():
    """
    Injection family with threshold 0.
    """
    return InjectionFamily(0.0)


@pytest.fixture(name="small_pmf")
def fixture_small_pmf():
    """
    Quantizer pmf with threshold 0 at theta = 0.5.
    """
    return QuantizerFamily(0.0)(0.5)


@pytest.fixture(name="small_attack")
def fixture_small_attack(small_family):
    """
    L_a = 1, xi = 0.7, P(L_a) = 0.3.
    """
    return AttackSpec(fork_point=1, xi=[0.7], dsa_prob=0.3, attack_pmf=small_family(0.5, [0.7]))


@pytest.fixture(name="random_pmf")
def fixture_random_pmf() -> Callable[..., AlphabetPmf]:
    """
    Returns a factory of random tabulated pmfs with partials, bounded away from 0.
    """
    def make(rng: np.random.Generator, size: int = 2, dimension: Optional[int] = 1) -> AlphabetPmf:
        probs = (rng.dirichlet(np.ones(size)) + 0.1) / (1.0 + 0.1 * size)
        dtheta = rng.normal(size=size)
        dtheta -= dtheta.mean()
        dxi = None
        if dimension:
            dxi = rng.normal(size=(size, dimension))
            dxi -= dxi.mean(axis=0)
        return AlphabetPmf(probs, dtheta=dtheta, dxi=dxi)
    return make
