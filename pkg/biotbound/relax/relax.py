"""
This module handles the convex relaxation of the CRB maximization:

    minimize    sum_r X_r Y_r
    subject to  sum_r w_r Y_r = 1,  0 <= Y_r <= 1

with X_r = (d phi0 / d theta)^2 / phi0 and w_r = phi0(r). It is solved in closed form
by water-filling over Omega_r = X_r / w_r, and checked by an independent
fractional-knapsack oracle with a Lagrange-dual certificate.
"""
# standard imports
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

# third party imports
import numpy as np
from loguru import logger

# project imports
from biotbound.errors import CertificateError, DegenerateInformationError, InfeasibleRelaxationError
from biotbound.fisher.fisher import resolve_method
from biotbound.model.pmf import AlphabetPmf
from biotbound.model.scenario import Scenario, check_honest_pmf, validate_geometry
from biotbound.outcome.outcome import DEFAULT_CAP, honest_terms, iter_blocks
from biotbound.outcome.types import honest_classes

TIE_TOLERANCE = 1e-12
BUDGET_TOLERANCE = 1e-12
CERTIFICATE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class SensitivityTable():
    """
    X, w and Omega over the active entries.

    With basis "outcomes", each entry is one outcome of R and `index` holds its rank.
    With basis "classes", each entry is an honest count class standing for
    `outcome_count[k]` outcomes sharing the same Omega; x and w are then the sums
    over those outcomes and `index` holds the class position.
    """
    x: np.ndarray
    w: np.ndarray
    omega: np.ndarray
    index: np.ndarray
    outcome_count: np.ndarray
    malicious_patterns: int
    dropped: int = 0
    basis: str = "outcomes"

    @property
    def size(self) -> int:
        """
        Returns the number of active entries.
        """
        return self.x.size

    def honest_information(self) -> float:
        """
        Returns sum_r X_r over R divided by the number of malicious patterns, which is
        the information of the honest block alone (|C0| L i(theta) for i.i.d. devices).
        """
        return math.fsum(self.x) / self.malicious_patterns

    def objective(self, y: np.ndarray) -> float:
        """
        Returns sum_r X_r Y_r.
        """
        return math.fsum(self.x * np.asarray(y, dtype=float))

    def budget(self, y: np.ndarray) -> float:
        """
        Returns sum_r w_r Y_r.
        """
        return math.fsum(self.w * np.asarray(y, dtype=float))


def _x_of(phi0: np.ndarray, dphi0: np.ndarray) -> np.ndarray:
    positive = phi0 > 0
    return np.where(positive, dphi0 ** 2 / np.where(positive, phi0, 1.0), 0.0)


def _enumerated_table(scenario: Scenario, p: AlphabetPmf, cap: int) -> SensitivityTable:
    xs, ws, ranks = [], [], []
    dropped = 0
    for start, block in iter_blocks(scenario, cap):
        phi0, dphi0 = honest_terms(block, scenario, p, derivative=True)
        active = phi0 > 0
        dropped += int(np.count_nonzero(~active))
        xs.append(_x_of(phi0, dphi0)[active])
        ws.append(phi0[active])
        ranks.append(start + np.flatnonzero(active))
    x, w = np.concatenate(xs), np.concatenate(ws)
    return SensitivityTable(
        x=x,
        w=w,
        omega=x / w,
        index=np.concatenate(ranks),
        outcome_count=np.ones(x.size),
        malicious_patterns=scenario.malicious_pattern_count,
        dropped=dropped,
        basis="outcomes",
    )


def _collapsed_table(scenario: Scenario, p: AlphabetPmf, cap: int) -> SensitivityTable:
    classes = honest_classes(scenario, p, cap)
    patterns = scenario.malicious_pattern_count
    count = classes.multiplicity * float(patterns)
    active = classes.phi0 > 0
    x = classes.x
    return SensitivityTable(
        x=(count * x)[active],
        w=(count * classes.phi0)[active],
        omega=(x / np.where(active, classes.phi0, 1.0))[active],
        index=np.flatnonzero(active),
        outcome_count=count[active],
        malicious_patterns=patterns,
        dropped=int(round(float(np.sum(count[~active])))),
        basis="classes",
    )


def sensitivity_weights(
    scenario: Scenario,
    p: AlphabetPmf,
    method: str = "auto",
    cap: int = DEFAULT_CAP
) -> SensitivityTable:
    """
    Builds X_r = (d phi0 / d theta)^2 / phi0, w_r = phi0(r) and Omega_r = X_r / w_r.
    Outcomes with phi0 = 0 are dropped from the active set and counted.
    """
    validate_geometry(scenario)
    check_honest_pmf(scenario, p)
    method = resolve_method(scenario, method)
    if method == "enumerate":
        table = _enumerated_table(scenario, p, cap)
    else:
        table = _collapsed_table(scenario, p, cap)
    if table.dropped:
        logger.info(f"{table.dropped} outcomes with phi0 = 0 removed from the active set")
    if not np.any(table.x > 0):
        raise DegenerateInformationError("Every X_r is zero: theta cannot be identified from honest data")
    logger.debug(f"Sensitivity table ({table.basis}) with {table.size} active entries")
    return table


@dataclass(frozen=True, eq=False)
class WaterLevel():
    """
    The partition obtained when the water level sits at one Omega group: entries below
    are filled (S2), the group is partially filled (S3), entries above are empty (S1).
    The budget sum_r w_r Y_r ranges over [budget_low, budget_high] as the group fills.
    """
    level: float
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    budget_low: float
    budget_high: float


def _tie_groups(omega_sorted: np.ndarray) -> Iterator[Tuple[int, int]]:
    start = 0
    for position in range(1, omega_sorted.size + 1):
        if position == omega_sorted.size or \
                omega_sorted[position] > omega_sorted[start] * (1.0 + TIE_TOLERANCE):
            yield start, position
            start = position


def water_levels(table: SensitivityTable) -> Iterator[WaterLevel]:
    """
    Raises the water level across the distinct Omega values in ascending order.
    """
    order = np.argsort(table.omega, kind="stable")
    omega_sorted = table.omega[order]
    filled = 0.0
    for start, stop in _tie_groups(omega_sorted):
        group_weight = math.fsum(table.w[order[start:stop]])
        yield WaterLevel(
            level=float(omega_sorted[start]),
            s1=order[stop:],
            s2=order[:start],
            s3=order[start:stop],
            budget_low=filled,
            budget_high=filled + group_weight,
        )
        filled += group_weight


@dataclass(frozen=True, eq=False)
class WaterfillSolution():
    """
    Optimal water level, Y*, partition and the KKT multipliers of the box constraints.
    """
    lambda_star: float
    y_star: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    objective: float
    guarantee: float
    kkt_mu: np.ndarray
    kkt_nu: np.ndarray


def _check_feasible(table: SensitivityTable):
    if table.size == 0:
        raise DegenerateInformationError("The active set of the relaxation is empty")
    total = math.fsum(table.w)
    if total < 1.0 - BUDGET_TOLERANCE:
        raise InfeasibleRelaxationError(f"sum_r w_r = {total!r} < 1: the budget cannot be met with Y <= 1")


def waterfill(table: SensitivityTable) -> WaterfillSolution:
    """
    Solves the relaxed problem in closed form. Y = 1 on entries with Omega below the
    water level, Y = 0 above it, and the group at the level gets
    (1 - sum_{S2} w) / sum_{S3} w. When the budget is met exactly at the end of a
    group the optimal level is not unique and the lower endpoint is reported.
    """
    _check_feasible(table)
    chosen: Optional[WaterLevel] = None
    for level in water_levels(table):
        chosen = level
        if level.budget_high >= 1.0:
            break
    group_weight = chosen.budget_high - chosen.budget_low
    fraction = min(1.0, max(0.0, (1.0 - chosen.budget_low) / group_weight))

    y_star = np.zeros(table.size)
    y_star[chosen.s2] = 1.0
    y_star[chosen.s3] = fraction
    lam = chosen.level

    kkt_mu = np.zeros(table.size)
    kkt_nu = np.zeros(table.size)
    kkt_mu[chosen.s1] = np.maximum(0.0, table.x[chosen.s1] - lam * table.w[chosen.s1])
    kkt_nu[chosen.s2] = np.maximum(0.0, lam * table.w[chosen.s2] - table.x[chosen.s2])

    objective = table.objective(y_star)
    if objective > 0:
        guarantee = 1.0 / objective
    else:
        logger.warning("The relaxed optimum is zero: the guarantee is infinite")
        guarantee = math.inf
    logger.debug(f"Water level {lam!r}: |S1|={chosen.s1.size}, |S2|={chosen.s2.size}, |S3|={chosen.s3.size}")
    return WaterfillSolution(
        lambda_star=lam,
        y_star=y_star,
        s1=chosen.s1,
        s2=chosen.s2,
        s3=chosen.s3,
        objective=objective,
        guarantee=guarantee,
        kkt_mu=kkt_mu,
        kkt_nu=kkt_nu,
    )


@dataclass(frozen=True)
class KktResiduals():
    """
    Worst violation of each optimality condition of the relaxed problem.
    """
    budget: float
    box: float
    dual_sign: float
    stationarity: float
    mu_slackness: float
    nu_slackness: float

    def worst(self) -> float:
        """
        Returns the largest residual.
        """
        return max(self.budget, self.box, self.dual_sign, self.stationarity, self.mu_slackness, self.nu_slackness)


def kkt_residuals(table: SensitivityTable, solution: WaterfillSolution) -> KktResiduals:
    """
    Evaluates the KKT conditions of a solution without solving anything.
    """
    y, mu, nu = solution.y_star, solution.kkt_mu, solution.kkt_nu
    stationarity = table.x - solution.lambda_star * table.w - mu + nu
    return KktResiduals(
        budget=abs(table.budget(y) - 1.0),
        box=float(max(0.0, -y.min(), y.max() - 1.0)),
        dual_sign=float(max(0.0, -mu.min(), -nu.min())),
        stationarity=float(np.abs(stationarity).max()),
        mu_slackness=float(np.abs(mu * y).max()),
        nu_slackness=float(np.abs(nu * (1.0 - y)).max()),
    )


def dual_value(table: SensitivityTable, lam: float) -> float:
    """
    Lagrange dual function g(lambda) = lambda + sum_r min(0, X_r - lambda w_r),
    a lower bound on the relaxed optimum for every lambda.
    """
    return lam + math.fsum(np.minimum(0.0, table.x - lam * table.w))


def lp_oracle(table: SensitivityTable) -> Tuple[float, np.ndarray]:
    """
    Solves the relaxed problem as a fractional knapsack (one entry at a time in Omega
    order) and certifies the result against the best dual value over every
    breakpoint lambda in {Omega_r}.
    """
    _check_feasible(table)
    order = np.argsort(table.omega, kind="stable")
    weights = table.w[order]
    cumulative = np.cumsum(weights)
    cut = min(int(np.searchsorted(cumulative, 1.0, side="left")), order.size - 1)
    before = float(cumulative[cut - 1]) if cut > 0 else 0.0

    y = np.zeros(table.size)
    y[order[:cut]] = 1.0
    y[order[cut]] = min(1.0, max(0.0, (1.0 - before) / weights[cut]))
    primal = table.objective(y)

    lams = table.omega[order]
    dual = lams + np.cumsum(table.x[order]) - lams * cumulative
    best = int(np.argmax(dual))
    certified = dual_value(table, float(lams[best]))
    if abs(primal - certified) > CERTIFICATE_TOLERANCE * max(1.0, abs(primal)):
        raise CertificateError(
            f"Primal value {primal!r} and dual value {certified!r} at lambda={lams[best]!r} disagree"
        )
    return primal, y


def guarantee_bound(
    scenario: Scenario,
    p: AlphabetPmf,
    p_la_row: Optional[np.ndarray] = None,
    method: str = "auto",
    cap: int = DEFAULT_CAP
) -> float:
    """
    Returns the estimation performance guarantee, the inverse of the relaxed optimum.
    It does not depend on L_a or P(L_a); `p_la_row` is only logged.
    """
    if p_la_row is not None:
        logger.debug(f"P(L_a) row {np.asarray(p_la_row).tolist()} does not enter the relaxation")
    return waterfill(sensitivity_weights(scenario, p, method=method, cap=cap)).guarantee
