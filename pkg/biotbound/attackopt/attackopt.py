"""
This module handles the adversary's problem: maximize CRB_theta over the attack
parameters xi (inner, projected gradient ascent from several starts) and over the
fork point L_a (outer, exhaustive).
"""
# standard imports
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

# third party imports
import numpy as np
from joblib import Parallel, delayed
from loguru import logger
from scipy.stats import qmc

# project imports
from biotbound.errors import (
    InvalidParameterError,
    NumericError,
    OptimizationFailedError,
    UnsupportedDimensionError,
)
from biotbound.fisher.fisher import crb_theta, fim_blocks
from biotbound.model.pmf import AlphabetPmf
from biotbound.model.scenario import AttackSpec, Scenario, check_honest_pmf, validate_scenario
from biotbound.outcome.outcome import DEFAULT_CAP

TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OptOptions():
    """
    Options of the multi-start projected gradient ascent.
    """
    starts: int = 16
    lower: float = -10.0
    upper: float = 10.0
    max_iter: int = 500
    tol: float = 1e-8
    fd_step: float = 1e-5
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 40
    seed: int = 0
    user_starts: Tuple[Tuple[float, ...], ...] = ()
    threads: int = 1
    method: str = "auto"
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.starts < 0:
            raise InvalidParameterError(f"starts must be nonnegative, got {self.starts}")
        if not self.lower < self.upper:
            raise InvalidParameterError(f"Empty box [{self.lower}, {self.upper}]")
        if not 0 < self.backtrack < 1:
            raise InvalidParameterError(f"backtrack must lie in (0, 1), got {self.backtrack}")


@dataclass
class StartRecord():
    """
    Convergence record of one start: the values are those of the accepted iterates.
    """
    fork_point: int
    start: np.ndarray
    xi: np.ndarray
    iterations: int = 0
    values: List[float] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def final_value(self) -> float:
        """
        Returns the last accepted value, or -inf when the start failed.
        """
        return self.values[-1] if self.values else -np.inf


@dataclass(frozen=True)
class ForkValue():
    """
    Best CRB found for one fork point.
    """
    fork_point: int
    crb: float
    xi: np.ndarray


@dataclass(frozen=True)
class AttackOptResult():
    """
    Best attack over every fork point, with the per-fork optima and the start trace.
    """
    best_crb: float
    best_xi: np.ndarray
    best_fork: int
    per_fork_values: List[ForkValue]
    trace: List[StartRecord]
    no_op_attack: bool = False


class CrbObjective():
    """
    CRB_theta as a function of xi for one fork point.
    """
    def __init__(
        self,
        scenario: Scenario,
        honest_pmf: AlphabetPmf,
        attack_family,
        fork_point: int,
        dsa_prob: float,
        method: str = "auto",
        cap: int = DEFAULT_CAP
    ):
        self.scenario = scenario
        self.honest_pmf = honest_pmf
        self.attack_family = attack_family
        self.fork_point = fork_point
        self.dsa_prob = dsa_prob
        self.method = method
        self.cap = cap

    def attack(self, xi: np.ndarray) -> AttackSpec:
        """
        Builds the attack of the given parameters.
        """
        return AttackSpec(
            fork_point=self.fork_point,
            xi=xi,
            dsa_prob=self.dsa_prob,
            attack_pmf=self.attack_family(self.scenario.theta, xi),
        )

    def __call__(self, xi: np.ndarray) -> float:
        blocks = fim_blocks(self.scenario, self.attack(xi), self.honest_pmf, method=self.method, cap=self.cap)
        return crb_theta(blocks).crb_theta

    def gradient(self, xi: np.ndarray, step: float) -> np.ndarray:
        """
        Central finite-difference gradient.
        """
        grad = np.empty(xi.size)
        for k in range(xi.size):
            shift = np.zeros(xi.size)
            shift[k] = step
            grad[k] = (self(xi + shift) - self(xi - shift)) / (2 * step)
        return grad


def _ascend(objective: CrbObjective, start: np.ndarray, options: OptOptions) -> StartRecord:
    xi = np.clip(start, options.lower, options.upper)
    record = StartRecord(fork_point=objective.fork_point, start=start, xi=xi)
    try:
        value = objective(xi)
    except NumericError as error:
        record.error = str(error)
        return record
    record.values.append(value)

    step = options.initial_step
    for _ in range(options.max_iter):
        try:
            grad = objective.gradient(xi, options.fd_step)
        except NumericError as error:
            logger.debug(f"Gradient unavailable at xi={xi.tolist()}: {error}")
            break
        if not np.any(grad):
            break

        direction = grad / np.linalg.norm(grad)
        accepted = None
        for _ in range(options.max_backtracks):
            candidate = np.clip(xi + step * direction, options.lower, options.upper)
            if np.array_equal(candidate, xi):
                break
            try:
                candidate_value = objective(candidate)
            except NumericError:
                candidate_value = -np.inf
            if candidate_value >= value + options.armijo * float(grad @ (candidate - xi)):
                accepted = (candidate, candidate_value)
                break
            step *= options.backtrack
        if accepted is None:
            break
        step = min(2.0 * step, options.upper - options.lower)

        change = accepted[1] - value
        xi, value = accepted
        record.iterations += 1
        record.values.append(value)
        if change <= options.tol:
            break

    record.xi = xi
    return record


def start_points(dimension: int, options: OptOptions) -> np.ndarray:
    """
    Returns the user starts followed by scrambled Halton points scaled to the box.
    """
    points = [np.asarray(start, dtype=float).reshape(dimension) for start in options.user_starts]
    if options.starts:
        sample = qmc.Halton(d=dimension, scramble=True, seed=options.seed).random(options.starts)
        points.extend(qmc.scale(sample, [options.lower] * dimension, [options.upper] * dimension))
    if not points:
        raise InvalidParameterError("At least one start point is required")
    return np.array(points)


def _fork_rates(scenario: Scenario, p_la: Sequence[float]) -> np.ndarray:
    p_la = np.asarray(p_la, dtype=float)
    if p_la.shape != (scenario.authentic_length,):
        raise InvalidParameterError(
            f"P(L_a) must have {scenario.authentic_length} entries (L_a = 1..L0), got {p_la.size}"
        )
    return p_la


def maximize_crb(
    scenario: Scenario,
    honest_pmf: AlphabetPmf,
    attack_family,
    p_la: Sequence[float],
    options: Optional[OptOptions] = None
) -> AttackOptResult:
    """
    Maximizes CRB_theta over xi in the box for each L_a in 1..L0 and keeps the best.
    Ties across fork points go to the smallest L_a.
    """
    options = options or OptOptions()
    p_la = _fork_rates(scenario, p_la)
    check_honest_pmf(scenario, honest_pmf)
    dimension = attack_family.dimension
    starts = start_points(dimension, options)
    validate_scenario(scenario, CrbObjective(scenario, honest_pmf, attack_family, 1, p_la[0]).attack(starts[0]))

    if not scenario.malicious:
        baseline = CrbObjective(scenario, honest_pmf, attack_family, 1, p_la[0], options.method, options.cap)(starts[0])
        logger.info("No malicious device: the attack has no effect on CRB_theta")
        per_fork = [
            ForkValue(fork_point, baseline, starts[0]) for fork_point in range(1, scenario.authentic_length + 1)
        ]
        return AttackOptResult(baseline, starts[0], 1, per_fork, [], no_op_attack=True)

    tasks = []
    for fork_point in range(1, scenario.authentic_length + 1):
        objective = CrbObjective(
            scenario, honest_pmf, attack_family, fork_point, p_la[fork_point - 1], options.method, options.cap
        )
        tasks.extend((objective, start) for start in starts)
    records = Parallel(n_jobs=options.threads, prefer="threads")(
        delayed(_ascend)(objective, start, options) for objective, start in tasks
    )

    per_fork = []
    for fork_point in range(1, scenario.authentic_length + 1):
        best = None
        for record in records:
            if record.fork_point != fork_point or record.error is not None:
                continue
            if best is None or record.final_value > best.final_value:
                best = record
        if best is None:
            logger.warning(f"Every start failed for L_a={fork_point}")
            continue
        logger.debug(f"L_a={fork_point}: CRB {best.final_value!r} at xi={best.xi.tolist()}")
        per_fork.append(ForkValue(fork_point, best.final_value, best.xi))

    if not per_fork:
        raise OptimizationFailedError("Every start of every fork point failed", trace=records)

    winner = per_fork[0]
    for candidate in per_fork[1:]:
        if candidate.crb > winner.crb + TIE_TOLERANCE:
            winner = candidate
    logger.info(f"Best attack: L_a={winner.fork_point}, xi={winner.xi.tolist()}, CRB_theta={winner.crb!r}")
    return AttackOptResult(winner.crb, winner.xi, winner.fork_point, per_fork, records)


@dataclass(frozen=True)
class GridSearchResult():
    """
    Best value of an exhaustive scan, with the values over fork points x grid.
    """
    best_crb: float
    best_xi: float
    best_fork: int
    values: np.ndarray


def grid_search_oracle(
    scenario: Scenario,
    honest_pmf: AlphabetPmf,
    attack_family,
    p_la: Sequence[float],
    grid: Sequence[float],
    method: str = "auto",
    cap: int = DEFAULT_CAP
) -> GridSearchResult:
    """
    Evaluates CRB_theta on every (L_a, xi) of {1..L0} x grid for a scalar xi.
    The first maximum in (L_a, grid) order is returned.
    """
    if attack_family.dimension != 1:
        raise UnsupportedDimensionError(f"Grid search needs a scalar xi, got dimension {attack_family.dimension}")
    p_la = _fork_rates(scenario, p_la)
    grid = np.asarray(grid, dtype=float)
    values = np.full((scenario.authentic_length, grid.size), np.nan)
    best = (-np.inf, float(grid[0]), 1)
    for fork_point in range(1, scenario.authentic_length + 1):
        objective = CrbObjective(scenario, honest_pmf, attack_family, fork_point, p_la[fork_point - 1], method, cap)
        for k, xi in enumerate(grid):
            try:
                values[fork_point - 1, k] = objective(np.array([xi]))
            except NumericError as error:
                logger.debug(f"Grid point L_a={fork_point}, xi={xi!r} skipped: {error}")
                continue
            if values[fork_point - 1, k] > best[0]:
                best = (float(values[fork_point - 1, k]), float(xi), fork_point)
    if not np.isfinite(best[0]):
        raise OptimizationFailedError("CRB_theta is undefined on the whole grid")
    return GridSearchResult(best_crb=best[0], best_xi=best[1], best_fork=best[2], values=values)
