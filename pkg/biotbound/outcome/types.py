"""
This module handles the count-class representation of the outcome space.

phi0 depends on an outcome only through the symbol counts of the honest block, and
phi_a only through the symbol counts of the three fork segments pooled over the
malicious devices. Sums over R collapse to sums over these classes weighted by
their multinomial multiplicities.
"""
# standard imports
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

# third party imports
import numpy as np

# project imports
from biotbound.model.pmf import AlphabetPmf
from biotbound.model.scenario import AttackSpec, Scenario
from biotbound.outcome.outcome import DEFAULT_CAP, check_cap, mix, product_with_partials


@lru_cache(maxsize=256)
def _compositions(total: int, parts: int) -> Tuple[Tuple[int, ...], ...]:
    if parts == 1:
        return ((total,),)
    result = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            result.append((first,) + rest)
    return tuple(result)


def compositions(total: int, parts: int) -> np.ndarray:
    """
    Returns every vector of `parts` nonnegative integers summing to `total`, shape (C, parts).
    """
    return np.array(_compositions(total, parts), dtype=np.int64).reshape(-1, parts)


def composition_count(total: int, parts: int) -> int:
    """
    Returns the number of compositions without enumerating them.
    """
    return math.comb(total + parts - 1, parts - 1)


def multinomial(counts: np.ndarray) -> np.ndarray:
    """
    Multinomial coefficients of each row of counts, as floats.
    """
    coefficients = []
    for row in np.atleast_2d(counts):
        coefficient, running = 1, 0
        for count in row:
            running += int(count)
            coefficient *= math.comb(running, int(count))
        coefficients.append(float(coefficient))
    return np.array(coefficients)


def monomial_with_partials(
    bases: np.ndarray,
    partials: np.ndarray,
    counts: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluates prod_o bases_o ** counts_o for each row of counts (C, |O|) and its partials,
    given the partials (|O|, m) of the bases.
    """
    powers = np.power(bases[None, :], counts)
    slope = np.where(counts > 0, counts * np.power(bases[None, :], np.maximum(counts - 1, 0)), 0.0)
    return product_with_partials(powers, slope[:, :, None] * partials[None, :, :])


@dataclass(frozen=True, eq=False)
class HonestClasses():
    """
    Count classes of the honest block with phi0 and d phi0 / d theta per class.
    """
    counts: np.ndarray
    multiplicity: np.ndarray
    phi0: np.ndarray
    dphi0_dtheta: np.ndarray

    @property
    def x(self) -> np.ndarray:
        """
        X per honest pattern of the class: (d phi0 / d theta)^2 / phi0, with 0^2/0 := 0.
        """
        positive = self.phi0 > 0
        return np.where(positive, self.dphi0_dtheta ** 2 / np.where(positive, self.phi0, 1.0), 0.0)


@dataclass(frozen=True, eq=False)
class MaliciousClasses():
    """
    Count classes of the malicious block (pre-fork, fork..L0, post-L0 segments)
    with phi_a and its partials per class.
    """
    counts: np.ndarray
    multiplicity: np.ndarray
    phia: np.ndarray
    dphia_dtheta: np.ndarray
    dphia_dxi: np.ndarray


def honest_class_count(scenario: Scenario) -> int:
    """
    Returns the number of honest count classes.
    """
    return composition_count(len(scenario.honest) * scenario.chain_length, scenario.alphabet_size)


def malicious_class_count(scenario: Scenario, fork_point: int) -> int:
    """
    Returns the number of malicious count classes for a fork point.
    """
    count = 1
    for blocks in scenario.fork_segments(fork_point):
        count *= composition_count(len(scenario.malicious) * blocks, scenario.alphabet_size)
    return count


def honest_classes(scenario: Scenario, p: AlphabetPmf, cap: int = DEFAULT_CAP) -> HonestClasses:
    """
    Evaluates phi0 and its partial on every honest count class.
    """
    check_cap(honest_class_count(scenario), cap)
    counts = compositions(len(scenario.honest) * scenario.chain_length, scenario.alphabet_size)
    phi0, dphi0 = monomial_with_partials(p.probs, p.require_dtheta()[:, None], counts)
    return HonestClasses(counts=counts, multiplicity=multinomial(counts), phi0=phi0, dphi0_dtheta=dphi0[:, 0])


def malicious_classes(
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    cap: int = DEFAULT_CAP
) -> MaliciousClasses:
    """
    Evaluates phi_a and its partials on every malicious count class.
    """
    check_cap(malicious_class_count(scenario, attack.fork_point), cap)
    size, dimension = scenario.alphabet_size, attack.dimension
    segments = [
        compositions(len(scenario.malicious) * blocks, size) for blocks in scenario.fork_segments(attack.fork_point)
    ]
    index = np.array(list(itertools.product(*(range(len(segment)) for segment in segments))), dtype=np.int64)
    pre, forked, post = (segment[index[:, k]] for k, segment in enumerate(segments))

    p_tilde = attack.attack_pmf
    # columns: theta, then xi
    p_partials = np.concatenate([p.require_dtheta()[:, None], np.zeros((size, dimension))], axis=1)
    tilde_partials = np.concatenate([p_tilde.require_dtheta()[:, None], p_tilde.require_dxi(dimension)], axis=1)

    def branch(p_counts, tilde_counts):
        p_value, p_d = monomial_with_partials(p.probs, p_partials, p_counts)
        tilde_value, tilde_d = monomial_with_partials(p_tilde.probs, tilde_partials, tilde_counts)
        return p_value * tilde_value, p_d * tilde_value[:, None] + tilde_d * p_value[:, None]

    dsa_value, dsa_partials = branch(pre, forked + post)
    authentic_value, authentic_partials = branch(pre + forked, post)
    partials = mix(attack, dsa_partials, authentic_partials)
    return MaliciousClasses(
        counts=np.stack([pre, forked, post], axis=1),
        multiplicity=np.prod(
            [multinomial(segment)[index[:, k]] for k, segment in enumerate(segments)], axis=0
        ),
        phia=mix(attack, dsa_value, authentic_value),
        dphia_dtheta=partials[:, 0],
        dphia_dxi=partials[:, 1:],
    )
