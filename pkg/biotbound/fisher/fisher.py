"""
This module assembles the Fisher information blocks of eta = [theta, xi], the CRB on
theta, the attack-free bound 1/J_C0 and the alignment residual of the psi vectors.
"""
# standard imports
from dataclasses import dataclass
from typing import Optional, Tuple

# third party imports
import numpy as np
from loguru import logger
from scipy.linalg import cho_factor, cho_solve

# project imports
from biotbound.errors import (
    DegenerateInformationError,
    InvalidParameterError,
    NumericError,
    SingularFimError,
    SingularWeightError,
)
from biotbound.model.pmf import AlphabetPmf
from biotbound.model.scenario import AttackSpec, Scenario
from biotbound.outcome.outcome import (
    DEFAULT_CAP,
    compensated_sum,
    honest_terms,
    iter_blocks,
    malicious_terms,
    mix,
)
from biotbound.outcome.types import honest_classes, malicious_classes

ENUMERATION_LIMIT = 2 ** 16
PSI_LIMIT = 2 ** 20
CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class FimBlocks():
    """
    Blocks of J_eta = [[J_C0 + J_Ca, f_a^T], [f_a, J_xi]] and the psi vectors.

    gamma_theta and xi_matrix are indexed by outcome (basis "outcomes") or by
    malicious count class with sqrt(multiplicity) weighting (basis "classes");
    both give the same Gram products.
    """
    j_c0: float
    j_ca: float
    f_a: np.ndarray
    j_xi: np.ndarray
    gamma_theta: Optional[np.ndarray] = None
    xi_matrix: Optional[np.ndarray] = None
    has_malicious: bool = True
    basis: str = "outcomes"

    @property
    def j_theta(self) -> float:
        """
        Returns J_theta = J_C0 + J_Ca.
        """
        return self.j_c0 + self.j_ca

    @property
    def matrix(self) -> np.ndarray:
        """
        Returns the full (1 + d) x (1 + d) FIM.
        """
        size = self.f_a.size + 1
        matrix = np.empty((size, size))
        matrix[0, 0] = self.j_theta
        matrix[0, 1:] = self.f_a
        matrix[1:, 0] = self.f_a
        matrix[1:, 1:] = self.j_xi
        return matrix


@dataclass(frozen=True)
class CrbReport():
    """
    CRB on theta, the bound 1/J_C0, the alignment residual and the Schur complement gap.
    """
    crb_theta: float
    bound: float
    alignment_residual: Optional[float]
    schur_gap: float


def resolve_method(scenario: Scenario, method: str) -> str:
    """
    Resolves "auto" to "enumerate" for small outcome spaces and "collapsed" otherwise.
    """
    if method == "auto":
        return "enumerate" if scenario.outcome_space_size <= ENUMERATION_LIMIT else "collapsed"
    if method not in ("enumerate", "collapsed"):
        raise InvalidParameterError(f"Unknown method {method}, expected auto, enumerate or collapsed")
    return method


def _ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    positive = denominator > 0
    return np.where(positive, numerator / np.where(positive, denominator, 1.0), 0.0)


def _check_weights(phia: np.ndarray, mass: np.ndarray, partials: np.ndarray) -> Optional[int]:
    singular = (phia == 0) & (mass > 0) & np.any(partials != 0, axis=1)
    if np.any(singular):
        return int(np.argmax(singular))
    return None


def _enumerated_blocks(scenario: Scenario, attack: AttackSpec, p: AlphabetPmf, cap: int) -> FimBlocks:
    keep_psi = scenario.outcome_space_size <= PSI_LIMIT
    sums, psi_parts = [], []
    for start, block in iter_blocks(scenario, cap):
        phi0, dphi0 = honest_terms(block, scenario, p, derivative=True)
        dsa, authentic, dsa_partials, authentic_partials = malicious_terms(
            block, scenario, attack, p, need_theta=True, need_xi=True
        )
        phia = mix(attack, dsa, authentic)
        partials = mix(attack, dsa_partials, authentic_partials)

        bad = _check_weights(phia, phi0, partials)
        if bad is not None:
            raise SingularWeightError(
                f"phi_a = 0 with a nonzero derivative at outcome {start + bad}: {block[bad].tolist()}"
            )

        weight = _ratio(phi0, phia)
        j_c0 = phia * _ratio(dphi0 ** 2, phi0)
        outer = weight[:, None, None] * partials[:, :, None] * partials[:, None, :]
        sums.append((compensated_sum(j_c0), compensated_sum(outer)))
        if keep_psi:
            psi_parts.append(np.sqrt(weight)[:, None] * partials)

    j_c0 = float(compensated_sum(np.array([part[0] for part in sums])))
    outer = compensated_sum(np.stack([part[1] for part in sums]))
    psi = np.concatenate(psi_parts).T if keep_psi else None
    if not keep_psi:
        logger.info(f"|R| = {scenario.outcome_space_size} above {PSI_LIMIT}: psi vectors not materialised")
    return FimBlocks(
        j_c0=j_c0,
        j_ca=float(outer[0, 0]),
        f_a=outer[1:, 0].copy(),
        j_xi=outer[1:, 1:].copy(),
        gamma_theta=None if psi is None else psi[0],
        xi_matrix=None if psi is None else psi[1:],
        has_malicious=bool(scenario.malicious),
        basis="outcomes",
    )


def _collapsed_blocks(scenario: Scenario, attack: AttackSpec, p: AlphabetPmf, cap: int) -> FimBlocks:
    honest = honest_classes(scenario, p, cap)
    j_c0 = float(compensated_sum(honest.multiplicity * honest.x))

    malicious = malicious_classes(scenario, attack, p, cap)
    partials = np.concatenate([malicious.dphia_dtheta[:, None], malicious.dphia_dxi], axis=1)
    bad = _check_weights(malicious.phia, malicious.multiplicity, partials)
    if bad is not None:
        raise SingularWeightError(
            f"phi_a = 0 with a nonzero derivative on the malicious count class {malicious.counts[bad].tolist()}"
        )
    weight = _ratio(malicious.multiplicity, malicious.phia)
    outer = compensated_sum(weight[:, None, None] * partials[:, :, None] * partials[:, None, :])
    psi = (np.sqrt(weight)[:, None] * partials).T
    return FimBlocks(
        j_c0=j_c0,
        j_ca=float(outer[0, 0]),
        f_a=outer[1:, 0].copy(),
        j_xi=outer[1:, 1:].copy(),
        gamma_theta=psi[0],
        xi_matrix=psi[1:],
        has_malicious=bool(scenario.malicious),
        basis="classes",
    )


def fim_blocks(
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    p_tilde: Optional[AlphabetPmf] = None,
    method: str = "auto",
    cap: int = DEFAULT_CAP
) -> FimBlocks:
    """
    Computes J_C0, J_Ca, f_a, J_xi and the psi vectors by exact sums over R
    (or over count classes when collapsed).
    """
    if p_tilde is not None:
        attack = AttackSpec(attack.fork_point, attack.xi, attack.dsa_prob, p_tilde)
    method = resolve_method(scenario, method)
    logger.debug(f"Computing FIM blocks ({method}) for L_a={attack.fork_point}, xi={attack.xi.tolist()}")
    if method == "enumerate":
        return _enumerated_blocks(scenario, attack, p, cap)
    return _collapsed_blocks(scenario, attack, p, cap)


def _nuisance_solve(j_xi: np.ndarray, rhs: np.ndarray, pseudo_inverse: bool) -> np.ndarray:
    eigenvalues = np.linalg.eigvalsh(j_xi)
    largest = float(eigenvalues.max()) if eigenvalues.size else 0.0
    singular = largest <= 0 or float(eigenvalues.min()) <= largest / CONDITION_LIMIT
    if not singular:
        return cho_solve(cho_factor(j_xi), rhs)
    if not pseudo_inverse:
        raise SingularFimError(f"J_xi is singular or ill-conditioned (eigenvalues {eigenvalues.tolist()})")
    logger.warning("J_xi is singular: using the pseudo-inverse, which departs from the exact CRB")
    return np.linalg.pinv(j_xi, hermitian=True) @ rhs


def alignment_residual(blocks: FimBlocks, pseudo_inverse: bool = False) -> float:
    """
    Returns ||gamma^T - Xi^T h||^2 with h = (Xi Xi^T)^-1 Xi gamma^T; zero exactly when
    gamma lies in the row span of Xi.
    """
    if blocks.gamma_theta is None or blocks.xi_matrix is None:
        raise NumericError("The psi vectors were not materialised for this outcome space")
    gram = blocks.xi_matrix @ blocks.xi_matrix.T
    h = _nuisance_solve(gram, blocks.xi_matrix @ blocks.gamma_theta, pseudo_inverse)
    residual = blocks.gamma_theta - blocks.xi_matrix.T @ h
    return float(compensated_sum(residual ** 2))


def crb_theta(blocks: FimBlocks, pseudo_inverse: bool = False) -> CrbReport:
    """
    CRB_theta = [J_C0 + (J_Ca - f_a^T J_xi^-1 f_a)]^-1, with the bound 1/J_C0.
    """
    if not blocks.j_c0 > 0:
        raise DegenerateInformationError("J_C0 = 0: honest data carry no information about theta")
    bound = 1.0 / blocks.j_c0
    if not blocks.has_malicious:
        return CrbReport(crb_theta=bound, bound=bound, alignment_residual=0.0, schur_gap=0.0)

    schur_gap = blocks.j_ca - float(blocks.f_a @ _nuisance_solve(blocks.j_xi, blocks.f_a, pseudo_inverse))
    residual = None
    if blocks.gamma_theta is not None:
        residual = alignment_residual(blocks, pseudo_inverse)
    return CrbReport(
        crb_theta=1.0 / (blocks.j_c0 + schur_gap),
        bound=bound,
        alignment_residual=residual,
        schur_gap=schur_gap,
    )


def crb_report(
    scenario: Scenario,
    attack: AttackSpec,
    p: AlphabetPmf,
    method: str = "auto",
    cap: int = DEFAULT_CAP,
    pseudo_inverse: bool = False
) -> Tuple[FimBlocks, CrbReport]:
    """
    Runs the whole pipeline from pmfs to CRB.
    """
    blocks = fim_blocks(scenario, attack, p, method=method, cap=cap)
    return blocks, crb_theta(blocks, pseudo_inverse)
