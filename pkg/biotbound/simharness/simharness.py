"""
This module handles the synthetic data harness: it draws stored chains under the
hijack and double-spending model, computes the joint maximum likelihood estimate
of (theta, xi) and compares its mean squared error with the CRB.
"""
# standard imports
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

# third party imports
import numpy as np
from joblib import Parallel, delayed
from loguru import logger
from scipy.special import logsumexp, xlogy

# project imports
from biotbound.errors import InvalidParameterError, UnidentifiableError
from biotbound.fisher.fisher import crb_theta, fim_blocks
from biotbound.model.pmf import AlphabetPmf, ModelFamily
from biotbound.model.scenario import AttackSpec, Scenario
from biotbound.outcome.outcome import DEFAULT_CAP, branch_masks

# types
SeedLike = Union[int, np.random.SeedSequence]

GRID_BUDGET = 10 ** 6
FLAT_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class ChainData():
    """
    One realised stored chain: the N x L symbols and whether the DSA succeeded.
    """
    symbols: np.ndarray
    dsa_succeeded: bool
    seed: Optional[int] = None


@dataclass(frozen=True, eq=False)
class ChainBatch():
    """
    Independent stored chains, shape (B, N, L), with one DSA outcome per chain.
    """
    symbols: np.ndarray
    dsa_succeeded: np.ndarray
    seed: Optional[int] = None

    def __len__(self):
        return self.symbols.shape[0]

    def __getitem__(self, item: int) -> ChainData:
        return ChainData(self.symbols[item], bool(self.dsa_succeeded[item]), self.seed)

    @classmethod
    def from_data(cls, data: Union[ChainData, "ChainBatch"]) -> "ChainBatch":
        """
        Wraps a single chain into a batch of one.
        """
        if isinstance(data, ChainBatch):
            return data
        return cls(data.symbols[None], np.array([data.dsa_succeeded]), data.seed)


def _inverse_cdf(probs: np.ndarray, uniform: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return np.minimum(np.searchsorted(cdf, uniform, side="right"), probs.size - 1)


def generate_batch(
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    count: int,
    seed: SeedLike,
    p_tilde: Optional[AlphabetPmf] = None
) -> ChainBatch:
    """
    Draws `count` chains. For each chain the DSA succeeds with probability P(L_a);
    honest devices always sample p, malicious devices sample p before L_a, the attack
    pmf after L0, and between the two the attack pmf only if the DSA succeeded.
    """
    if count < 1:
        raise InvalidParameterError(f"count must be at least 1, got {count}")
    p_tilde = p_tilde or attack.attack_pmf
    rng = np.random.default_rng(seed)
    dsa_succeeded = rng.random(count) < attack.dsa_prob
    uniform = rng.random((count, scenario.n_devices, scenario.chain_length))

    honest_draws = _inverse_cdf(p.probs, uniform)
    attack_draws = _inverse_cdf(p_tilde.probs, uniform)
    dsa_mask, authentic_mask = branch_masks(scenario, attack.fork_point)
    tilde_blocks = np.where(dsa_succeeded[:, None], dsa_mask[None, :], authentic_mask[None, :])

    use_tilde = np.zeros(uniform.shape, dtype=bool)
    use_tilde[:, scenario.malicious_rows, :] = tilde_blocks[:, None, :]
    symbols = np.where(use_tilde, attack_draws, honest_draws)
    return ChainBatch(symbols, dsa_succeeded, seed if isinstance(seed, int) else None)


def generate_chain(
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    seed: int,
    p_tilde: Optional[AlphabetPmf] = None
) -> ChainData:
    """
    Draws one chain; identical to the first chain of a batch drawn with the same seed.
    """
    return generate_batch(scenario, attack, p, 1, seed, p_tilde)[0]


@dataclass(frozen=True, eq=False)
class SufficientStatistics():
    """
    Honest symbol counts pooled over chains, and the distinct malicious segment counts
    (before L_a, L_a..L0, after L0) with the number of chains showing each.
    """
    honest_counts: np.ndarray
    segment_counts: np.ndarray
    segment_weights: np.ndarray
    chains: int


def sufficient_statistics(data: Union[ChainData, ChainBatch], scenario: Scenario, fork_point: int) -> SufficientStatistics:
    """
    Reduces chains to the counts the likelihood depends on.
    """
    batch = ChainBatch.from_data(data)
    symbols = batch.symbols
    size = scenario.alphabet_size
    honest = symbols[:, scenario.honest_rows, :].reshape(-1)
    honest_counts = np.bincount(honest, minlength=size).astype(float)

    malicious = symbols[:, scenario.malicious_rows, :]
    bounds = [0, fork_point - 1, scenario.authentic_length, scenario.chain_length]
    segments = []
    for low, high in zip(bounds[:-1], bounds[1:]):
        segment = malicious[:, :, low:high].reshape(len(batch), -1)
        segments.append(np.stack([np.count_nonzero(segment == symbol, axis=1) for symbol in range(size)], axis=1))
    stacked = np.stack(segments, axis=1)
    unique, weights = np.unique(stacked.reshape(len(batch), -1), axis=0, return_counts=True)
    return SufficientStatistics(
        honest_counts=honest_counts,
        segment_counts=unique.reshape(-1, 3, size).astype(float),
        segment_weights=weights.astype(float),
        chains=len(batch),
    )


def _log_likelihood_grid(
    stats: SufficientStatistics,
    dsa_prob: float,
    p_probs: np.ndarray,
    tilde_probs: np.ndarray
) -> np.ndarray:
    # p_probs, tilde_probs: (G, |O|); returns the log-likelihood at each of the G points
    total = xlogy(stats.honest_counts[None, :], p_probs).sum(axis=1)
    if stats.segment_counts.shape[0] == 0 or not np.any(stats.segment_counts):
        return total
    pre, forked, post = (stats.segment_counts[:, k, :] for k in range(3))
    p_grid, tilde_grid = p_probs[:, None, :], tilde_probs[:, None, :]
    log_pre = xlogy(pre[None], p_grid).sum(axis=2)
    dsa = log_pre + xlogy((forked + post)[None], tilde_grid).sum(axis=2)
    authentic = log_pre + xlogy(forked[None], p_grid).sum(axis=2) + xlogy(post[None], tilde_grid).sum(axis=2)
    mixed = logsumexp(
        np.stack([dsa, authentic]),
        axis=0,
        b=np.array([dsa_prob, 1.0 - dsa_prob])[:, None, None],
    )
    return total + mixed @ stats.segment_weights


def log_likelihood(
    data: Union[ChainData, ChainBatch],
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf
) -> float:
    """
    Returns sum over chains of log phi(r; theta, xi) at the pmfs given.
    """
    stats = sufficient_statistics(data, scenario, attack.fork_point)
    return float(_log_likelihood_grid(stats, attack.dsa_prob, p.probs[None], attack.attack_pmf.probs[None])[0])


@dataclass(frozen=True)
class MleOptions():
    """
    Search box and grid of the maximum likelihood search.
    """
    theta_bounds: Tuple[float, float] = (-10.0, 10.0)
    xi_bounds: Tuple[float, float] = (-10.0, 10.0)
    grid_points: int = 101
    refinements: int = 2
    refine_points: int = 21


@dataclass(frozen=True)
class MleEstimate():
    """
    Maximum likelihood estimate; `at_boundary` flags an estimate on the search box.
    """
    theta_hat: float
    xi_hat: np.ndarray
    log_likelihood: float
    at_boundary: bool


def _family_probs(family, theta: np.ndarray, xi: Optional[np.ndarray]) -> np.ndarray:
    if getattr(family, "vectorized", False):
        if xi is None:
            return family.probs(theta)
        return family.probs(theta, xi[:, 0] if xi.shape[1] == 1 else xi)
    if xi is None:
        return np.array([family.probs(value) for value in theta])
    return np.array([family.probs(value, point) for value, point in zip(theta, xi)])


def _grid_values(
    stats: SufficientStatistics,
    family: ModelFamily,
    dsa_prob: float,
    axes: List[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    mesh = np.stack([axis.reshape(-1) for axis in np.meshgrid(*axes, indexing="ij")], axis=1)
    theta = mesh[:, 0]
    xi = mesh[:, 1:] if mesh.shape[1] > 1 else None
    p_probs = _family_probs(family.honest, theta, None)
    if xi is None:
        tilde_probs = p_probs
    else:
        tilde_probs = _family_probs(family.attack, theta, xi)
    return mesh, _log_likelihood_grid(stats, dsa_prob, p_probs, tilde_probs)


def mle_estimate(
    data: Union[ChainData, ChainBatch],
    scenario: Scenario,
    attack: AttackSpec,
    family: ModelFamily,
    options: Optional[MleOptions] = None
) -> MleEstimate:
    """
    Maximizes the log-likelihood over theta (and xi when malicious devices exist) by a
    coarse grid followed by local refinements around the best point. The fork point
    and P(L_a) are taken from `attack`; its xi is ignored.
    """
    options = options or MleOptions()
    stats = sufficient_statistics(data, scenario, attack.fork_point)
    dimension = attack.dimension if scenario.malicious else 0
    bounds = [options.theta_bounds] + [options.xi_bounds] * dimension
    points = min(options.grid_points, max(2, int(GRID_BUDGET ** (1.0 / len(bounds)))))
    if points < options.grid_points:
        logger.info(f"Coarse grid reduced to {points} points per dimension")

    axes = [np.linspace(low, high, points) for low, high in bounds]
    spacing = np.array([(high - low) / (points - 1) for low, high in bounds])
    mesh, values = _grid_values(stats, family, attack.dsa_prob, axes)
    finite = values[np.isfinite(values)]
    if finite.size == 0 or finite.max() - finite.min() <= FLAT_TOLERANCE * (1.0 + abs(finite.max())):
        raise UnidentifiableError("The likelihood is flat over the search box")
    best = mesh[int(np.argmax(np.where(np.isfinite(values), values, -np.inf)))]

    for _ in range(options.refinements):
        axes = [
            np.unique(np.clip(np.linspace(center - step, center + step, options.refine_points), low, high))
            for center, step, (low, high) in zip(best, spacing, bounds)
        ]
        spacing = spacing * 2.0 / (options.refine_points - 1)
        mesh, values = _grid_values(stats, family, attack.dsa_prob, axes)
        best = mesh[int(np.argmax(np.where(np.isfinite(values), values, -np.inf)))]
        logger.debug(f"MLE refined to {best.tolist()} (spacing {spacing.tolist()})")

    at_boundary = any(
        min(abs(value - low), abs(value - high)) <= step / 2
        for value, step, (low, high) in zip(best, spacing, bounds)
    )
    if at_boundary:
        logger.warning(f"MLE {best.tolist()} lies on the search box")
    return MleEstimate(
        theta_hat=float(best[0]),
        xi_hat=best[1:].copy(),
        log_likelihood=float(np.max(values[np.isfinite(values)])),
        at_boundary=at_boundary,
    )


@dataclass(frozen=True)
class MseReport():
    """
    Empirical MSE of the MLE against the CRB of an estimate built from `chains` chains.
    """
    trials: int
    chains: int
    theta_mse: float
    xi_mse: float
    crb_theta: float
    ratio: float
    ratio_stderr: float


def _trial(
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    family: ModelFamily,
    chains: int,
    seed: int,
    options: MleOptions
) -> Tuple[float, float]:
    batch = generate_batch(scenario, attack, p, chains, seed)
    estimate = mle_estimate(batch, scenario, attack, family, options)
    theta_error = (estimate.theta_hat - scenario.theta) ** 2
    xi_error = float(np.sum((estimate.xi_hat - attack.xi) ** 2)) if scenario.malicious else 0.0
    return theta_error, xi_error


def mse_experiment(
    scenario: Scenario,
    attack: AttackSpec,
    family: ModelFamily,
    trials: int,
    seed: int,
    chains: int = 50,
    options: Optional[MleOptions] = None,
    threads: int = 1,
    method: str = "auto",
    cap: int = DEFAULT_CAP
) -> MseReport:
    """
    Repeats generate then estimate `trials` times and compares the MSE of theta_hat with
    the CRB of `chains` independent chains, CRB_theta(one chain) / chains.
    """
    if trials < 2:
        raise InvalidParameterError(f"trials must be at least 2, got {trials}")
    if chains < 1:
        raise InvalidParameterError(f"chains must be at least 1, got {chains}")
    options = options or MleOptions()
    p = family.honest(scenario.theta)
    blocks = fim_blocks(scenario, attack, p, method=method, cap=cap)
    crb = crb_theta(blocks).crb_theta / chains

    seeds = [int(value) for value in np.random.SeedSequence(seed).generate_state(trials)]
    errors = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_trial)(scenario, attack, p, family, chains, trial_seed, options) for trial_seed in seeds
    )
    theta_errors = np.array([error[0] for error in errors])
    xi_errors = np.array([error[1] for error in errors])
    theta_mse = float(theta_errors.mean())
    report = MseReport(
        trials=trials,
        chains=chains,
        theta_mse=theta_mse,
        xi_mse=float(xi_errors.mean()),
        crb_theta=crb,
        ratio=theta_mse / crb,
        ratio_stderr=float(theta_errors.std(ddof=1) / np.sqrt(trials) / crb),
    )
    logger.info(f"MSE/CRB = {report.ratio!r} over {trials} trials of {chains} chains")
    return report
