"""
This module computes the double-spending success probability P(L_a) under a
Bernoulli block race: every new block is mined by the adversary with probability
alpha, and the counterfeit branch must reach length L before the authentic one.
"""
# standard imports
from dataclasses import dataclass
from typing import Tuple

# third party imports
import numpy as np
from joblib import Parallel, delayed
from loguru import logger

# project imports
from biotbound.errors import InvalidParameterError
from biotbound.model.scenario import Scenario


@dataclass(frozen=True)
class RaceSpec():
    """
    A block race: the adversary needs `counterfeit_needed` blocks (L - L_a + 1),
    the honest miners need `honest_needed` blocks (L - L0).
    """
    adversary_share: float
    counterfeit_needed: int
    honest_needed: int

    def __post_init__(self):
        if not 0.0 <= self.adversary_share <= 1.0:
            raise InvalidParameterError(f"adversary_share must lie in [0, 1], got {self.adversary_share}")
        if self.counterfeit_needed < 1:
            raise InvalidParameterError(f"counterfeit_needed must be at least 1, got {self.counterfeit_needed}")
        if self.honest_needed < 0:
            raise InvalidParameterError(f"honest_needed must be nonnegative, got {self.honest_needed}")

    @classmethod
    def for_fork(cls, scenario: Scenario, fork_point: int, alpha: float) -> "RaceSpec":
        """
        Builds the race of a fork at L_a in the given scenario.
        """
        return cls(
            adversary_share=alpha,
            counterfeit_needed=scenario.chain_length - fork_point + 1,
            honest_needed=scenario.chain_length - scenario.authentic_length,
        )


def race_probability_exact(spec: RaceSpec) -> float:
    """
    Probability that the adversary mines `counterfeit_needed` blocks before the honest
    miners mine `honest_needed`, by dynamic programming over the remaining needs.
    Returns 0 when the authentic branch already reached L (honest_needed = 0).
    """
    if spec.honest_needed == 0:
        return 0.0
    alpha = spec.adversary_share
    # wins[b] holds the win probability with `a` counterfeit blocks left and b honest blocks left
    wins = [0.0] + [1.0] * spec.honest_needed
    for _ in range(spec.counterfeit_needed):
        updated = [0.0]
        for honest_left in range(1, spec.honest_needed + 1):
            updated.append(alpha * wins[honest_left] + (1.0 - alpha) * updated[honest_left - 1])
        wins = updated
    return wins[spec.honest_needed]


def _race_partition(spec: RaceSpec, trials: int, seed_sequence: np.random.SeedSequence) -> int:
    rng = np.random.default_rng(seed_sequence)
    horizon = spec.counterfeit_needed + spec.honest_needed - 1
    adversary_blocks = rng.random((trials, horizon)) < spec.adversary_share
    adversary_total = np.cumsum(adversary_blocks, axis=1)
    honest_total = np.cumsum(~adversary_blocks, axis=1)
    adversary_done = np.where(
        (adversary_total >= spec.counterfeit_needed).any(axis=1),
        np.argmax(adversary_total >= spec.counterfeit_needed, axis=1),
        horizon,
    )
    honest_done = np.where(
        (honest_total >= spec.honest_needed).any(axis=1),
        np.argmax(honest_total >= spec.honest_needed, axis=1),
        horizon,
    )
    return int(np.count_nonzero(adversary_done < honest_done))


def race_probability_mc(spec: RaceSpec, trials: int, seed: int, partitions: int = 1) -> Tuple[float, float]:
    """
    Monte Carlo estimate of the race probability with its binomial standard error.
    Deterministic under a fixed (seed, partitions) pair.
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be at least 1, got {trials}")
    if spec.honest_needed == 0:
        return 0.0, 0.0
    partitions = max(1, min(partitions, trials))
    sizes = [trials // partitions + (1 if k < trials % partitions else 0) for k in range(partitions)]
    streams = np.random.SeedSequence(seed).spawn(partitions)
    wins = Parallel(n_jobs=partitions, prefer="threads")(
        delayed(_race_partition)(spec, size, stream) for size, stream in zip(sizes, streams)
    )
    estimate = sum(wins) / trials
    stderr = float(np.sqrt(estimate * (1.0 - estimate) / trials))
    logger.debug(f"Race {spec}: {sum(wins)}/{trials} adversary wins")
    return estimate, stderr


def success_profile(scenario: Scenario, alpha: float) -> np.ndarray:
    """
    Returns P(L_a) for L_a = 1..L0 under the race model.
    """
    return np.array([
        race_probability_exact(RaceSpec.for_fork(scenario, fork_point, alpha))
        for fork_point in range(1, scenario.authentic_length + 1)
    ])
