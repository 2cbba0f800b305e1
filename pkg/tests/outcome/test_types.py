"""
Unit tests for the types module.
"""
# third party imports
import numpy as np
import pytest

# project imports
from biotbound.outcome.outcome import outcome_tables
from biotbound.outcome.types import (
    composition_count,
    compositions,
    honest_class_count,
    honest_classes,
    malicious_class_count,
    malicious_classes,
    multinomial,
)
from biotbound.errors import OutcomeSpaceTooLargeError


def test_compositions():
    """
    Unit tests for compositions and composition_count functions.
    """
    assert compositions(3, 2).tolist() == [[0, 3], [1, 2], [2, 1], [3, 0]]
    assert compositions(0, 2).tolist() == [[0, 0]]
    assert compositions(2, 3).shape == (6, 3)
    assert composition_count(2, 3) == 6
    assert composition_count(10, 2) == 11
    assert np.all(compositions(5, 3).sum(axis=1) == 5)


def test_multinomial():
    """
    Unit tests for multinomial function.
    """
    assert multinomial(np.array([[2, 1], [0, 3]])).tolist() == [3.0, 1.0]
    assert multinomial(np.array([1, 1, 1])).tolist() == [6.0]
    assert multinomial(np.array([[0, 0]])).tolist() == [1.0]


def test_class_counts(baseline_scenario):
    """
    Unit tests for honest_class_count and malicious_class_count functions.
    """
    assert honest_class_count(baseline_scenario) == 11
    # segments of 3, 1 and 1 blocks
    assert malicious_class_count(baseline_scenario, 4) == 16
    assert malicious_class_count(baseline_scenario, 1) == 1 * 5 * 2


def test_classes_sum_to_one(baseline_scenario, baseline_attack, baseline_pmf):
    """
    The class multiplicities cover the outcome space and the class pmf sums to 1.
    """
    honest = honest_classes(baseline_scenario, baseline_pmf)
    malicious = malicious_classes(baseline_scenario, baseline_attack, baseline_pmf)
    assert honest.multiplicity.sum() == 2 ** 10
    assert malicious.multiplicity.sum() == 2 ** 5
    assert np.dot(honest.multiplicity, honest.phi0) == pytest.approx(1.0, abs=1e-12)
    assert np.dot(malicious.multiplicity, malicious.phia) == pytest.approx(1.0, abs=1e-12)
    # the partials of a pmf sum to zero
    assert np.dot(honest.multiplicity, honest.dphi0_dtheta) == pytest.approx(0.0, abs=1e-10)
    assert np.dot(malicious.multiplicity, malicious.dphia_dxi[:, 0]) == pytest.approx(0.0, abs=1e-10)


def test_classes_match_enumeration(small_scenario, small_attack, small_pmf):
    """
    Each class value equals the value of every outcome in the class.
    """
    tables = outcome_tables(small_scenario, small_attack, small_pmf)
    malicious = malicious_classes(small_scenario, small_attack, small_pmf)
    honest = honest_classes(small_scenario, small_pmf)

    for rank in range(64):
        symbols = tables.outcome(rank).symbols
        honest_count = np.bincount(symbols[0], minlength=2)
        row = np.flatnonzero(np.all(honest.counts == honest_count, axis=1))[0]
        assert tables.phi0[rank] == pytest.approx(honest.phi0[row])
        assert tables.dphi0_dtheta[rank] == pytest.approx(honest.dphi0_dtheta[row])

        # fork at block 1: no pre-fork block, blocks 1..2, block 3
        segments = [np.bincount(symbols[1, :0], minlength=2),
                    np.bincount(symbols[1, 0:2], minlength=2),
                    np.bincount(symbols[1, 2:], minlength=2)]
        row = np.flatnonzero(np.all(malicious.counts == np.stack(segments), axis=(1, 2)))[0]
        assert tables.phia[rank] == pytest.approx(malicious.phia[row])
        assert tables.dphia_dtheta[rank] == pytest.approx(malicious.dphia_dtheta[row])
        assert tables.dphia_dxi[rank, 0] == pytest.approx(malicious.dphia_dxi[row, 0])


def test_class_cap(baseline_scenario, baseline_pmf):
    """
    Class enumeration honours the cap.
    """
    with pytest.raises(OutcomeSpaceTooLargeError):
        honest_classes(baseline_scenario, baseline_pmf, cap=10)
