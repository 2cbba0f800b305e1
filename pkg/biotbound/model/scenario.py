"""
This module describes the network geometry and the attack, and validates them.
"""
# standard imports
from dataclasses import dataclass, field
from typing import Iterable, Tuple

# third party imports
import numpy as np
from loguru import logger

# project imports
from biotbound.errors import (
    DegenerateScenarioError,
    InvalidForkError,
    InvalidParameterError,
    InvalidPartitionError,
)
from biotbound.model.pmf import AlphabetPmf

SMALL_PROBABILITY = 1e-12


@dataclass(frozen=True)
class Scenario():
    """
    Network geometry. Device ids are 1-based, as in {1, ..., N}.
    """
    n_devices: int
    honest: Tuple[int, ...]
    malicious: Tuple[int, ...]
    chain_length: int
    authentic_length: int
    alphabet_size: int = 2
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "honest", tuple(sorted(int(j) for j in self.honest)))
        object.__setattr__(self, "malicious", tuple(sorted(int(j) for j in self.malicious)))

    @property
    def honest_rows(self) -> np.ndarray:
        """
        Returns the 0-based rows of the honest devices in an outcome.
        """
        return np.asarray(self.honest, dtype=int) - 1

    @property
    def malicious_rows(self) -> np.ndarray:
        """
        Returns the 0-based rows of the malicious devices in an outcome.
        """
        return np.asarray(self.malicious, dtype=int) - 1

    @property
    def outcome_space_size(self) -> int:
        """
        Returns |R| = |O|^(N L).
        """
        return self.alphabet_size ** (self.n_devices * self.chain_length)

    @property
    def malicious_pattern_count(self) -> int:
        """
        Returns the number of distinct malicious sub-outcomes |O|^(|Ca| L).
        """
        return self.alphabet_size ** (len(self.malicious) * self.chain_length)

    def fork_segments(self, fork_point: int) -> Tuple[int, int, int]:
        """
        Returns the number of blocks before the fork, between the fork and L0, and after L0.
        """
        return (
            fork_point - 1,
            self.authentic_length - fork_point + 1,
            self.chain_length - self.authentic_length,
        )


@dataclass(frozen=True, eq=False)
class AttackSpec():
    """
    Fork point L_a, attack parameters xi, DSA success probability P(L_a)
    and the resulting attack pmf.
    """
    fork_point: int
    xi: np.ndarray
    dsa_prob: float
    attack_pmf: AlphabetPmf = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        object.__setattr__(self, "fork_point", int(self.fork_point))
        object.__setattr__(self, "dsa_prob", float(self.dsa_prob))

    @property
    def dimension(self) -> int:
        """
        Returns dim(xi).
        """
        return self.xi.size


def _check_partition(scenario: Scenario):
    honest = set(scenario.honest)
    malicious = set(scenario.malicious)
    overlap = honest & malicious
    if overlap:
        raise InvalidPartitionError(f"Devices {sorted(overlap)} are both honest and malicious")
    if len(honest) != len(scenario.honest) or len(malicious) != len(scenario.malicious):
        raise InvalidPartitionError("Device ids must not repeat")
    if honest | malicious != set(range(1, scenario.n_devices + 1)):
        raise InvalidPartitionError(
            f"Honest {sorted(honest)} and malicious {sorted(malicious)} do not cover devices 1..{scenario.n_devices}"
        )


def _warn_small(pmf: AlphabetPmf, name: str):
    smallest = float(pmf.probs.min())
    if smallest < SMALL_PROBABILITY:
        logger.warning(f"{name} has a probability of {smallest!r}, below {SMALL_PROBABILITY}")


def validate_geometry(scenario: Scenario) -> Scenario:
    """
    Checks the device partition, the alphabet and L0; the honest set must not be empty.
    """
    if scenario.n_devices < 1:
        raise InvalidParameterError(f"n_devices must be at least 1, got {scenario.n_devices}")
    _check_partition(scenario)
    if not scenario.honest:
        raise DegenerateScenarioError("No honest device: J_C0 = 0 and the bound is infinite")
    if scenario.alphabet_size < 2:
        raise InvalidParameterError(f"alphabet_size must be at least 2, got {scenario.alphabet_size}")
    if not 1 <= scenario.authentic_length <= scenario.chain_length:
        raise InvalidParameterError(
            f"Expected 1 <= L0 <= L, got L0={scenario.authentic_length}, L={scenario.chain_length}"
        )
    return scenario


def validate_scenario(scenario: Scenario, attack: AttackSpec) -> Tuple[Scenario, AttackSpec]:
    """
    Returns the pair unchanged if every invariant holds, raises otherwise.
    """
    validate_geometry(scenario)
    if not 1 <= attack.fork_point <= scenario.authentic_length:
        raise InvalidForkError(
            f"Fork point {attack.fork_point} is outside of 1..{scenario.authentic_length}"
        )
    if not 0.0 <= attack.dsa_prob <= 1.0:
        raise InvalidParameterError(f"dsa_prob must lie in [0, 1], got {attack.dsa_prob}")
    if attack.dimension < 1:
        raise InvalidParameterError("xi must have at least one entry")
    if attack.attack_pmf.size != scenario.alphabet_size:
        raise InvalidParameterError(
            f"Attack pmf has {attack.attack_pmf.size} symbols, alphabet has {scenario.alphabet_size}"
        )
    _warn_small(attack.attack_pmf, "Attack pmf")
    return scenario, attack


def check_honest_pmf(scenario: Scenario, pmf: AlphabetPmf) -> AlphabetPmf:
    """
    Checks that the honest pmf matches the scenario alphabet.
    """
    if pmf.size != scenario.alphabet_size:
        raise InvalidParameterError(f"Honest pmf has {pmf.size} symbols, alphabet has {scenario.alphabet_size}")
    _warn_small(pmf, "Honest pmf")
    return pmf


def make_scenario(
    honest_count: int,
    malicious_count: int,
    chain_length: int,
    authentic_length: int,
    theta: float = 0.0,
    alphabet_size: int = 2
) -> Scenario:
    """
    Builds a scenario whose first devices are honest and the remaining ones malicious.
    """
    n_devices = honest_count + malicious_count
    honest: Iterable[int] = range(1, honest_count + 1)
    malicious: Iterable[int] = range(honest_count + 1, n_devices + 1)
    return Scenario(
        n_devices=n_devices,
        honest=tuple(honest),
        malicious=tuple(malicious),
        chain_length=chain_length,
        authentic_length=authentic_length,
        alphabet_size=alphabet_size,
        theta=theta,
    )
