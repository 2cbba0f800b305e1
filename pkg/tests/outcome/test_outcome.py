"""
Unit tests for the outcome module.
"""
# third party imports
import numpy as np
import pytest

# project imports
from biotbound.errors import InvalidParameterError, OutcomeSpaceTooLargeError
from biotbound.model.pmf import AlphabetPmf, QuantizerFamily
from biotbound.model.scenario import AttackSpec, make_scenario
from biotbound.outcome.outcome import (
    Outcome,
    compensated_sum,
    dphi0_dtheta,
    dphia_dtheta,
    dphia_dxi,
    enumerate_outcomes,
    honest_factor,
    joint_pmf,
    malicious_components,
    malicious_factor,
    outcome_rank,
    outcome_tables,
    product_with_partials,
)


def _shifted_attack(attack, family, theta, xi):
    return AttackSpec(attack.fork_point, xi, attack.dsa_prob, family(theta, xi))


def test_joint_pmf_normalization(small_scenario, small_attack, small_pmf):
    """
    The joint pmf sums to 1 over the outcome space, in both evaluation paths.
    """
    tables = outcome_tables(small_scenario, small_attack, small_pmf)
    assert tables.joint.size == 64
    assert compensated_sum(tables.joint) == pytest.approx(1.0, abs=1e-12)

    total = sum(joint_pmf(outcome, small_scenario, small_attack, small_pmf)
                for outcome in enumerate_outcomes(small_scenario))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_joint_pmf_by_hand():
    """
    Unit tests for joint_pmf function on an outcome evaluated by hand.
    """
    scenario = make_scenario(1, 1, 3, 2)
    p = AlphabetPmf([0.2, 0.8])
    attack = AttackSpec(fork_point=2, xi=[0.0], dsa_prob=0.25, attack_pmf=AlphabetPmf([0.6, 0.4]))
    outcome = Outcome([[0, 1, 1], [1, 0, 0]])

    # honest row: 0.2 * 0.8 * 0.8
    assert honest_factor(outcome, scenario, p) == pytest.approx(0.128)
    # DSA branch: p for block 1, p tilde for blocks 2 and 3
    # authentic branch: p for blocks 1 and 2, p tilde for block 3
    dsa, authentic = malicious_components(outcome, scenario, attack, p)
    assert dsa == pytest.approx(0.8 * 0.6 * 0.6)
    assert authentic == pytest.approx(0.8 * 0.2 * 0.6)
    expected = 0.25 * 0.288 + 0.75 * 0.096
    assert malicious_factor(outcome, scenario, attack, p) == pytest.approx(expected)
    assert joint_pmf(outcome, scenario, attack, p) == pytest.approx(0.128 * expected)


def test_fork_at_authentic_length():
    """
    With L_a = L0 = L the two branches coincide on every block but the last one.
    """
    scenario = make_scenario(1, 1, 2, 2)
    p = AlphabetPmf([0.3, 0.7])
    attack = AttackSpec(fork_point=2, xi=[0.0], dsa_prob=1.0, attack_pmf=AlphabetPmf([0.9, 0.1]))
    outcome = Outcome([[1, 1], [1, 0]])
    assert malicious_factor(outcome, scenario, attack, p) == pytest.approx(0.7 * 0.9)
    attack = AttackSpec(fork_point=2, xi=[0.0], dsa_prob=0.0, attack_pmf=AlphabetPmf([0.9, 0.1]))
    assert malicious_factor(outcome, scenario, attack, p) == pytest.approx(0.7 * 0.3)


def test_partials_against_finite_differences(small_scenario, small_attack, small_family):
    """
    The product-rule partials agree with central differences of the factors.
    """
    honest = QuantizerFamily(0.0)
    theta, xi, step = 0.5, np.array([0.7]), 1e-6

    for outcome in list(enumerate_outcomes(small_scenario))[::7]:
        p = honest(theta)
        p_up, p_down = honest(theta + step), honest(theta - step)
        up = _shifted_attack(small_attack, small_family, theta + step, xi)
        down = _shifted_attack(small_attack, small_family, theta - step, xi)

        fd_phi0 = (honest_factor(outcome, small_scenario, p_up) -
                   honest_factor(outcome, small_scenario, p_down)) / (2 * step)
        assert dphi0_dtheta(outcome, small_scenario, p) == pytest.approx(fd_phi0, abs=1e-8)

        fd_phia = (malicious_factor(outcome, small_scenario, up, p_up) -
                   malicious_factor(outcome, small_scenario, down, p_down)) / (2 * step)
        assert dphia_dtheta(outcome, small_scenario, small_attack, p) == pytest.approx(fd_phia, abs=1e-8)

        up = _shifted_attack(small_attack, small_family, theta, xi + step)
        down = _shifted_attack(small_attack, small_family, theta, xi - step)
        fd_xi = (malicious_factor(outcome, small_scenario, up, p) -
                 malicious_factor(outcome, small_scenario, down, p)) / (2 * step)
        assert dphia_dxi(outcome, small_scenario, small_attack, p)[0] == pytest.approx(fd_xi, abs=1e-8)


def test_outcome_tables_match_single_outcomes(small_scenario, small_attack, small_pmf):
    """
    The table entries match the single-outcome evaluators at the same rank.
    """
    tables = outcome_tables(small_scenario, small_attack, small_pmf)
    for rank in (0, 13, 37, 63):
        outcome = tables.outcome(rank)
        assert outcome_rank(outcome, small_scenario) == rank
        assert tables.phi0[rank] == pytest.approx(honest_factor(outcome, small_scenario, small_pmf))
        assert tables.phia[rank] == pytest.approx(
            malicious_factor(outcome, small_scenario, small_attack, small_pmf)
        )
        assert tables.dphia_dxi[rank, 0] == pytest.approx(
            dphia_dxi(outcome, small_scenario, small_attack, small_pmf)[0]
        )


def test_outcome_space_cap(baseline_scenario, baseline_attack, baseline_pmf):
    """
    Enumeration beyond the cap raises with the required cap in the message.
    """
    with pytest.raises(OutcomeSpaceTooLargeError) as error:
        outcome_tables(baseline_scenario, baseline_attack, baseline_pmf, cap=64)
    assert error.value.required == 2 ** 15
    assert "--cap 32768" in str(error.value)

    with pytest.raises(OutcomeSpaceTooLargeError):
        next(enumerate_outcomes(make_scenario(1, 1, 3, 2), cap=63))


def test_product_with_partials():
    """
    Unit tests for product_with_partials function, zero factors included.
    """
    values = np.array([[2.0, 0.0, 3.0], [1.0, 2.0, 4.0]])
    partials = np.ones((2, 3, 1))
    product, derivative = product_with_partials(values, partials)
    assert np.allclose(product, [0.0, 8.0])
    # d(abc) = bc + ac + ab
    assert np.allclose(derivative[:, 0], [6.0, 8.0 + 4.0 + 2.0])

    product, derivative = product_with_partials(np.zeros((2, 0)), np.zeros((2, 0, 3)))
    assert np.allclose(product, 1.0)
    assert derivative.shape == (2, 3)


def test_compensated_sum():
    """
    Unit tests for compensated_sum function.
    """
    values = np.array([1e16, 1.0, -1e16])
    assert compensated_sum(values) == 1.0
    assert np.allclose(compensated_sum(np.ones((4, 2))), [4.0, 4.0])


def test_outcome_checks(small_attack, small_pmf):
    """
    Symbols outside the alphabet and outcomes of the wrong shape are rejected.
    """
    scenario = make_scenario(1, 1, 1, 1)
    p = AlphabetPmf([0.3, 0.7])
    for symbols in ([[-1], [5]], [[0], [2]], [[0, 1], [1, 0]], [0, 1]):
        with pytest.raises(InvalidParameterError):
            honest_factor(Outcome(symbols), scenario, p)
        with pytest.raises(InvalidParameterError):
            malicious_factor(symbols, scenario, small_attack, small_pmf)
        with pytest.raises(InvalidParameterError):
            outcome_rank(symbols, scenario)
    with pytest.raises(InvalidParameterError):
        joint_pmf(Outcome([[0], [-1]]), scenario, small_attack, small_pmf)
    with pytest.raises(InvalidParameterError):
        dphia_dxi(Outcome([[0], [3]]), scenario, small_attack, small_pmf)
    assert honest_factor(Outcome([[1], [0]]), scenario, p) == pytest.approx(0.7)


def test_factor_locality(random_pmf):
    """
    phi0 only reads the honest rows and phi_a only the malicious rows.
    """
    rng = np.random.default_rng(5)
    scenario = make_scenario(2, 2, 3, 2)
    p = random_pmf(rng, dimension=None)
    attack = AttackSpec(fork_point=2, xi=[0.4], dsa_prob=0.35, attack_pmf=random_pmf(rng))
    honest_rows, malicious_rows = scenario.honest_rows, scenario.malicious_rows
    for _ in range(20):
        outcome = rng.integers(0, 2, size=(4, 3))
        other = outcome.copy()
        other[malicious_rows] = rng.integers(0, 2, size=(2, 3))
        assert honest_factor(other, scenario, p) == honest_factor(outcome, scenario, p)
        assert dphi0_dtheta(other, scenario, p) == dphi0_dtheta(outcome, scenario, p)
        other = outcome.copy()
        other[honest_rows] = rng.integers(0, 2, size=(2, 3))
        assert malicious_factor(other, scenario, attack, p) == malicious_factor(outcome, scenario, attack, p)
        assert dphia_dtheta(other, scenario, attack, p) == dphia_dtheta(outcome, scenario, attack, p)


def test_joint_partials_sum_to_zero(random_pmf):
    """
    The joint pmf sums to 1 for every (theta, xi), so its partials sum to 0 over R.
    """
    rng = np.random.default_rng(17)
    for honest_count, malicious_count, chain_length, authentic_length in [(1, 1, 3, 2), (2, 1, 3, 3), (1, 2, 2, 1)]:
        scenario = make_scenario(honest_count, malicious_count, chain_length, authentic_length)
        p = random_pmf(rng, dimension=None)
        attack = AttackSpec(
            fork_point=int(rng.integers(1, authentic_length + 1)),
            xi=[0.1, -0.2],
            dsa_prob=float(rng.uniform()),
            attack_pmf=random_pmf(rng, dimension=2),
        )
        tables = outcome_tables(scenario, attack, p)
        dphi_dtheta = tables.dphi0_dtheta * tables.phia + tables.phi0 * tables.dphia_dtheta
        dphi_dxi = tables.phi0[:, None] * tables.dphia_dxi
        assert compensated_sum(dphi_dtheta) == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(compensated_sum(dphi_dxi), 0.0, atol=1e-9)
