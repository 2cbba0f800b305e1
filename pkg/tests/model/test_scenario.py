"""
Unit tests for the scenario module.
"""
# standard imports
from unittest.mock import patch

# third party imports
import pytest

# project imports
from biotbound.errors import (
    DegenerateScenarioError,
    InvalidForkError,
    InvalidParameterError,
    InvalidPartitionError,
)
from biotbound.model.pmf import AlphabetPmf
from biotbound.model.scenario import AttackSpec, Scenario, check_honest_pmf, make_scenario, validate_scenario


def _attack(fork_point=1, dsa_prob=0.5, probs=(0.5, 0.5)):
    return AttackSpec(fork_point=fork_point, xi=[0.0], dsa_prob=dsa_prob, attack_pmf=AlphabetPmf(list(probs)))


def test_make_scenario():
    """
    Unit tests for make_scenario function.
    """
    scenario = make_scenario(2, 1, 5, 4, theta=2.0)
    assert scenario.honest == (1, 2)
    assert scenario.malicious == (3,)
    assert scenario.outcome_space_size == 2 ** 15
    assert scenario.malicious_pattern_count == 2 ** 5
    assert scenario.fork_segments(4) == (3, 1, 1)
    assert scenario.fork_segments(1) == (0, 4, 1)
    assert scenario.honest_rows.tolist() == [0, 1]


def test_validate_scenario(baseline_scenario, baseline_attack):
    """
    Unit tests for validate_scenario function.
    """
    assert validate_scenario(baseline_scenario, baseline_attack) == (baseline_scenario, baseline_attack)

    with pytest.raises(InvalidPartitionError):
        validate_scenario(Scenario(3, (1, 2), (2, 3), 5, 4), _attack())
    with pytest.raises(InvalidPartitionError):
        validate_scenario(Scenario(3, (1,), (3,), 5, 4), _attack())
    with pytest.raises(DegenerateScenarioError):
        validate_scenario(Scenario(2, (), (1, 2), 5, 4), _attack())
    with pytest.raises(InvalidParameterError):
        validate_scenario(make_scenario(1, 1, 3, 4), _attack())
    with pytest.raises(InvalidForkError):
        validate_scenario(make_scenario(1, 1, 5, 4), _attack(fork_point=5))
    with pytest.raises(InvalidForkError):
        validate_scenario(make_scenario(1, 1, 5, 4), _attack(fork_point=0))
    with pytest.raises(InvalidParameterError):
        validate_scenario(make_scenario(1, 1, 5, 4), _attack(dsa_prob=1.5))
    with pytest.raises(InvalidParameterError):
        validate_scenario(make_scenario(1, 1, 5, 4), _attack(probs=(0.2, 0.3, 0.5)))


def test_validate_scenario_small_probability():
    """
    A near-degenerate attack pmf is accepted with a warning.
    """
    with patch("biotbound.model.scenario.logger") as mock_logger:
        validate_scenario(make_scenario(1, 1, 3, 2), _attack(probs=(1e-13, 1.0 - 1e-13)))
        assert mock_logger.warning.call_count == 1


def test_check_honest_pmf():
    """
    Unit tests for check_honest_pmf function.
    """
    pmf = AlphabetPmf([0.5, 0.5])
    assert check_honest_pmf(make_scenario(1, 1, 3, 2), pmf) is pmf
    with pytest.raises(InvalidParameterError):
        check_honest_pmf(make_scenario(1, 1, 3, 2, alphabet_size=3), pmf)
