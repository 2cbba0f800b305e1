"""
This module enumerates the outcome space R = O^(N L) and evaluates the
honest factor phi0, the malicious mixture factor phi_a and their partials.
"""
# standard imports
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

# third party imports
import numpy as np
from loguru import logger

# project imports
from biotbound.errors import InvalidParameterError, OutcomeSpaceTooLargeError
from biotbound.model.pmf import AlphabetPmf
from biotbound.model.scenario import AttackSpec, Scenario

DEFAULT_CAP = 2 ** 24
CHUNK_SIZE = 2 ** 16


@dataclass(frozen=True, eq=False)
class Outcome():
    """
    One stored chain content: an N x L array of alphabet symbols.
    """
    symbols: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "symbols", np.asarray(self.symbols, dtype=np.int64))


OutcomeLike = Union[Outcome, np.ndarray]


def check_cap(required: int, cap: int):
    """
    Raises if an enumeration of `required` items would exceed the cap.
    """
    if required > cap:
        raise OutcomeSpaceTooLargeError(required, cap)


def outcome_block(scenario: Scenario, start: int, stop: int) -> np.ndarray:
    """
    Returns the outcomes of ranks start..stop-1 as an array of shape (B, N, L).
    Ranks follow the lexicographic order of the row-major flattened outcome.
    """
    n_positions = scenario.n_devices * scenario.chain_length
    ranks = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((ranks.size, n_positions), dtype=np.int64)
    for position in range(n_positions - 1, -1, -1):
        digits[:, position] = ranks % scenario.alphabet_size
        ranks = ranks // scenario.alphabet_size
    return digits.reshape(-1, scenario.n_devices, scenario.chain_length)


def iter_blocks(
    scenario: Scenario,
    cap: int = DEFAULT_CAP,
    chunk_size: int = CHUNK_SIZE
) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Yields (first rank, outcome block) over disjoint consecutive rank ranges.
    """
    size = scenario.outcome_space_size
    check_cap(size, cap)
    for start in range(0, size, chunk_size):
        stop = min(size, start + chunk_size)
        logger.debug(f"Enumerating outcomes {start}..{stop - 1} of {size}")
        yield start, outcome_block(scenario, start, stop)


def enumerate_outcomes(scenario: Scenario, cap: int = DEFAULT_CAP) -> Iterator[Outcome]:
    """
    Yields every outcome of R in lexicographic order.
    """
    for _, block in iter_blocks(scenario, cap):
        for symbols in block:
            yield Outcome(symbols)


def outcome_rank(outcome: OutcomeLike, scenario: Scenario) -> int:
    """
    Returns the lexicographic rank of an outcome.
    """
    rank = 0
    for symbol in check_outcome(_symbols(outcome), scenario).reshape(-1):
        rank = rank * scenario.alphabet_size + int(symbol)
    return rank


def compensated_sum(values: np.ndarray) -> np.ndarray:
    """
    Sums along the first axis with math.fsum, entry by entry.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.float64(math.fsum(values))
    flat = values.reshape(values.shape[0], -1)
    return np.array([math.fsum(flat[:, k]) for k in range(flat.shape[1])]).reshape(values.shape[1:])


def product_with_partials(values: np.ndarray, partials: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Product over the last axis of `values` (B, K) and its derivative by the product
    rule, given the partials (B, K, m) of each factor. Leave-one-out products are
    taken from prefix and suffix products so zero factors need no division.
    """
    batch, n_factors = values.shape
    n_partials = partials.shape[-1]
    if n_factors == 0:
        return np.ones(batch), np.zeros((batch, n_partials))
    ones = np.ones((batch, 1))
    prefix = np.cumprod(np.concatenate([ones, values[:, :-1]], axis=1), axis=1)
    suffix = np.cumprod(np.concatenate([ones, values[:, :0:-1]], axis=1), axis=1)[:, ::-1]
    leave_one_out = prefix * suffix
    product = prefix[:, -1] * values[:, -1]
    return product, np.einsum("bk,bkm->bm", leave_one_out, partials)


def _symbols(outcome: OutcomeLike) -> np.ndarray:
    if isinstance(outcome, Outcome):
        return outcome.symbols
    return np.asarray(outcome, dtype=np.int64)


def check_outcome(symbols: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Raises unless the symbols form an N x L array (or a batch of them) over {0..|O|-1}.
    """
    expected = (scenario.n_devices, scenario.chain_length)
    if symbols.ndim not in (2, 3) or symbols.shape[-2:] != expected:
        raise InvalidParameterError(f"Outcome of shape {symbols.shape} does not match N x L = {expected}")
    if symbols.size and (symbols.min() < 0 or symbols.max() >= scenario.alphabet_size):
        raise InvalidParameterError(
            f"Outcome symbols must lie in 0..{scenario.alphabet_size - 1}, got {symbols.min()}..{symbols.max()}"
        )
    return symbols


def _batch(outcome: OutcomeLike, scenario: Scenario) -> np.ndarray:
    symbols = check_outcome(_symbols(outcome), scenario)
    return symbols[None] if symbols.ndim == 2 else symbols


def honest_terms(
    batch: np.ndarray,
    scenario: Scenario,
    p: AlphabetPmf,
    derivative: bool = False
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Returns phi0 and, if asked, d phi0 / d theta for a batch of outcomes (B, N, L).
    """
    honest = batch[:, scenario.honest_rows, :].reshape(batch.shape[0], -1)
    values = p.probs[honest]
    if not derivative:
        return np.prod(values, axis=1), None
    partials = p.require_dtheta()[honest][:, :, None]
    product, dproduct = product_with_partials(values, partials)
    return product, dproduct[:, 0]


def branch_masks(scenario: Scenario, fork_point: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns, per block, whether the stored symbol follows the attack pmf, for the
    successful-DSA branch and for the authentic branch.
    """
    blocks = np.arange(1, scenario.chain_length + 1)
    return blocks >= fork_point, blocks > scenario.authentic_length


def _branch(
    symbols: np.ndarray,
    tilde_mask: np.ndarray,
    p: AlphabetPmf,
    p_tilde: AlphabetPmf,
    need_theta: bool,
    need_xi: bool,
    dimension: int
) -> Tuple[np.ndarray, np.ndarray]:
    batch = symbols.shape[0]
    mask = np.broadcast_to(tilde_mask, symbols.shape).reshape(batch, -1)
    flat = symbols.reshape(batch, -1)
    values = np.where(mask, p_tilde.probs[flat], p.probs[flat])
    columns = []
    if need_theta:
        columns.append(np.where(mask, p_tilde.require_dtheta()[flat], p.require_dtheta()[flat])[:, :, None])
    if need_xi:
        dxi = p_tilde.require_dxi(dimension)[flat]
        columns.append(np.where(mask[:, :, None], dxi, 0.0))
    if not columns:
        return np.prod(values, axis=1), np.zeros((batch, 0))
    return product_with_partials(values, np.concatenate(columns, axis=2))


def malicious_terms(
    batch: np.ndarray,
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    need_theta: bool = False,
    need_xi: bool = False
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns the successful-DSA and authentic mixture components of phi_a for a batch,
    with their partials (columns: theta if asked, then xi if asked).
    """
    symbols = batch[:, scenario.malicious_rows, :]
    dsa_mask, authentic_mask = branch_masks(scenario, attack.fork_point)
    dsa_value, dsa_partials = _branch(
        symbols, dsa_mask, p, attack.attack_pmf, need_theta, need_xi, attack.dimension
    )
    authentic_value, authentic_partials = _branch(
        symbols, authentic_mask, p, attack.attack_pmf, need_theta, need_xi, attack.dimension
    )
    return dsa_value, authentic_value, dsa_partials, authentic_partials


def mix(attack: AttackSpec, dsa: np.ndarray, authentic: np.ndarray) -> np.ndarray:
    """
    Mixes the two branch quantities with weights P(L_a) and 1 - P(L_a).
    """
    return attack.dsa_prob * dsa + (1.0 - attack.dsa_prob) * authentic


def honest_factor(outcome: OutcomeLike, scenario: Scenario, p: AlphabetPmf) -> float:
    """
    phi0(r): product of p over the honest coordinates (1 for an empty product).
    """
    return float(honest_terms(_batch(outcome, scenario), scenario, p)[0][0])


def malicious_components(
    outcome: OutcomeLike,
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf
) -> Tuple[float, float]:
    """
    Returns the unweighted products of the successful-DSA branch and of the authentic branch.
    """
    dsa, authentic, _, _ = malicious_terms(_batch(outcome, scenario), scenario, attack, p)
    return float(dsa[0]), float(authentic[0])


def malicious_factor(outcome: OutcomeLike, scenario: Scenario, attack: AttackSpec, p: AlphabetPmf) -> float:
    """
    phi_a(r, eta): two-branch mixture over the event that the DSA succeeded.
    """
    dsa, authentic = malicious_components(outcome, scenario, attack, p)
    return float(mix(attack, dsa, authentic))


def joint_pmf(outcome: OutcomeLike, scenario: Scenario, attack: AttackSpec, p: AlphabetPmf) -> float:
    """
    phi(r, eta) = phi0(r) phi_a(r, eta).
    """
    return honest_factor(outcome, scenario, p) * malicious_factor(outcome, scenario, attack, p)


def dphi0_dtheta(outcome: OutcomeLike, scenario: Scenario, p: AlphabetPmf) -> float:
    """
    Partial of phi0 in theta by the product rule over honest coordinates.
    """
    return float(honest_terms(_batch(outcome, scenario), scenario, p, derivative=True)[1][0])


def dphia_dtheta(outcome: OutcomeLike, scenario: Scenario, attack: AttackSpec, p: AlphabetPmf) -> float:
    """
    Partial of phi_a in theta; uses the partials of both p and the attack pmf.
    """
    _, _, dsa, authentic = malicious_terms(_batch(outcome, scenario), scenario, attack, p, need_theta=True)
    return float(mix(attack, dsa[0, 0], authentic[0, 0]))


def dphia_dxi(outcome: OutcomeLike, scenario: Scenario, attack: AttackSpec, p: AlphabetPmf) -> np.ndarray:
    """
    Partial of phi_a in xi; p does not depend on xi so only attack pmf partials enter.
    """
    _, _, dsa, authentic = malicious_terms(_batch(outcome, scenario), scenario, attack, p, need_xi=True)
    return mix(attack, dsa[0], authentic[0])


@dataclass(frozen=True, eq=False)
class OutcomeTables():
    """
    phi0, phi_a and their partials for every outcome, indexed by outcome rank.
    """
    scenario: Scenario
    phi0: np.ndarray
    phia: np.ndarray
    dphi0_dtheta: np.ndarray
    dphia_dtheta: np.ndarray
    dphia_dxi: np.ndarray

    def outcome(self, rank: int) -> Outcome:
        """
        Decodes the outcome of a given rank.
        """
        return Outcome(outcome_block(self.scenario, rank, rank + 1)[0])

    @property
    def joint(self) -> np.ndarray:
        """
        Returns phi = phi0 phi_a over R.
        """
        return self.phi0 * self.phia


def outcome_tables(
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    cap: int = DEFAULT_CAP
) -> OutcomeTables:
    """
    Evaluates every factor and partial over the whole outcome space.
    """
    parts = []
    for _, block in iter_blocks(scenario, cap):
        phi0, dphi0 = honest_terms(block, scenario, p, derivative=True)
        dsa, authentic, dsa_partials, authentic_partials = malicious_terms(
            block, scenario, attack, p, need_theta=True, need_xi=True
        )
        partials = mix(attack, dsa_partials, authentic_partials)
        parts.append((phi0, mix(attack, dsa, authentic), dphi0, partials[:, 0], partials[:, 1:]))
    return OutcomeTables(
        scenario=scenario,
        phi0=np.concatenate([part[0] for part in parts]),
        phia=np.concatenate([part[1] for part in parts]),
        dphi0_dtheta=np.concatenate([part[2] for part in parts]),
        dphia_dtheta=np.concatenate([part[3] for part in parts]),
        dphia_dxi=np.concatenate([part[4] for part in parts]),
    )
