"""
Unit tests for the simharness module.
"""
# third party imports
import numpy as np
import pytest
from scipy.stats import chi2

# project imports
from biotbound.errors import InvalidParameterError, UnidentifiableError
from biotbound.fisher.fisher import fim_blocks
from biotbound.model.pmf import AlphabetPmf, InjectionFamily, ModelFamily, NumericFamily, QuantizerFamily
from biotbound.model.scenario import AttackSpec, make_scenario
from biotbound.outcome.outcome import joint_pmf, outcome_tables
from biotbound.simharness.simharness import (
    ChainBatch,
    ChainData,
    MleOptions,
    generate_batch,
    generate_chain,
    log_likelihood,
    mle_estimate,
    mse_experiment,
    sufficient_statistics,
)


@pytest.fixture(name="honest_only")
def fixture_honest_only():
    """
    Two honest devices, L = 6, threshold at theta = 2 with noise 0.5.
    """
    scenario = make_scenario(2, 0, 6, 6, theta=2.0)
    family = ModelFamily(QuantizerFamily(2.0, 0.5), InjectionFamily(2.0, 0.5))
    attack = AttackSpec(1, [0.0], 0.0, family.attack(2.0, [0.0]))
    return scenario, family, attack


def test_degenerate_draws():
    """
    With one-point pmfs the schedule of each branch is visible in the symbols.
    """
    scenario = make_scenario(1, 1, 4, 3)
    p, p_tilde = AlphabetPmf([1.0, 0.0]), AlphabetPmf([0.0, 1.0])

    batch = generate_batch(scenario, AttackSpec(1, [0.0], 1.0, p_tilde), p, 20, seed=1)
    assert np.all(batch.dsa_succeeded)
    assert np.all(batch.symbols[:, 0, :] == 0)
    assert np.all(batch.symbols[:, 1, :] == 1)

    batch = generate_batch(scenario, AttackSpec(2, [0.0], 0.0, p_tilde), p, 20, seed=1)
    assert not np.any(batch.dsa_succeeded)
    assert np.all(batch.symbols[:, 1, :3] == 0)
    assert np.all(batch.symbols[:, 1, 3] == 1)

    batch = generate_batch(scenario, AttackSpec(2, [0.0], 1.0, p_tilde), p, 20, seed=1)
    assert batch.symbols[0, 1].tolist() == [0, 1, 1, 1]

    with pytest.raises(InvalidParameterError):
        generate_batch(scenario, AttackSpec(2, [0.0], 1.0, p_tilde), p, 0, seed=1)


def test_reproducibility(small_scenario, small_attack, small_pmf):
    """
    The same seed gives the same chains, and a single chain is the first of its batch.
    """
    first = generate_batch(small_scenario, small_attack, small_pmf, 100, seed=42)
    second = generate_batch(small_scenario, small_attack, small_pmf, 100, seed=42)
    assert first.symbols.tobytes() == second.symbols.tobytes()
    assert np.array_equal(first.dsa_succeeded, second.dsa_succeeded)
    assert len(first) == 100

    chain = generate_chain(small_scenario, small_attack, small_pmf, seed=42)
    single = generate_batch(small_scenario, small_attack, small_pmf, 1, seed=42)
    assert np.array_equal(chain.symbols, single.symbols[0])
    assert chain.dsa_succeeded == bool(single.dsa_succeeded[0])
    assert chain.seed == 42


def test_distributional_fidelity():
    """
    Outcome frequencies of 10^5 chains pass a chi-square test against the joint pmf.
    """
    scenario = make_scenario(1, 1, 3, 2, theta=0.5)
    p = QuantizerFamily(0.5)(0.5)
    attack = AttackSpec(1, [0.7], 0.3, InjectionFamily(0.5)(0.5, [0.7]))
    samples = 100000

    batch = generate_batch(scenario, attack, p, samples, seed=3)
    flat = batch.symbols.reshape(samples, -1)
    ranks = flat @ (2 ** np.arange(flat.shape[1] - 1, -1, -1))
    observed = np.bincount(ranks, minlength=64)
    expected = samples * outcome_tables(scenario, attack, p).joint

    statistic = float(np.sum((observed - expected) ** 2 / expected))
    assert statistic < chi2.ppf(0.999, df=63)


def test_log_likelihood(small_scenario, small_attack, small_pmf):
    """
    The count-based likelihood equals the log of the joint pmf, chain by chain.
    """
    batch = generate_batch(small_scenario, small_attack, small_pmf, 30, seed=8)
    expected = [np.log(joint_pmf(batch[k].symbols, small_scenario, small_attack, small_pmf)) for k in range(30)]
    for k in range(5):
        assert log_likelihood(batch[k], small_scenario, small_attack, small_pmf) == pytest.approx(expected[k])
    assert log_likelihood(batch, small_scenario, small_attack, small_pmf) == pytest.approx(sum(expected))


def test_sufficient_statistics(small_scenario):
    """
    Unit tests for sufficient_statistics function.
    """
    data = ChainBatch(
        symbols=np.array([[[0, 1, 1], [1, 0, 1]], [[0, 0, 0], [1, 0, 1]]]),
        dsa_succeeded=np.array([True, False]),
    )
    stats = sufficient_statistics(data, small_scenario, fork_point=2)
    assert stats.chains == 2
    assert stats.honest_counts.tolist() == [4.0, 2.0]
    # blocks before the fork, from the fork to L0, after L0
    assert stats.segment_counts.tolist() == [[[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]]
    assert stats.segment_weights.tolist() == [2.0]

    single = sufficient_statistics(ChainData(data.symbols[0], True), small_scenario, fork_point=2)
    assert single.honest_counts.tolist() == [1.0, 2.0]


def test_mle_consistency(honest_only):
    """
    Without malicious devices the MLE of theta from 200 chains is within 0.05.
    """
    scenario, family, attack = honest_only
    batch = generate_batch(scenario, attack, family.honest(2.0), 200, seed=17)
    estimate = mle_estimate(batch, scenario, attack, family)
    assert abs(estimate.theta_hat - 2.0) < 0.05
    assert estimate.xi_hat.size == 0
    assert not estimate.at_boundary


def test_joint_mle(baseline_scenario, baseline_config):
    """
    The joint MLE recovers (theta, xi) within five asymptotic standard deviations.
    """
    family = baseline_config.get_model_family()
    attack = baseline_config.get_attack()
    p = family.honest(2.0)
    chains = 1000
    batch = generate_batch(baseline_scenario, attack, p, chains, seed=5)
    estimate = mle_estimate(batch, baseline_scenario, attack, family)

    covariance = np.linalg.inv(fim_blocks(baseline_scenario, attack, p).matrix * chains)
    deviation = np.sqrt(np.diag(covariance))
    assert abs(estimate.theta_hat - 2.0) <= 5 * deviation[0]
    assert abs(estimate.xi_hat[0] - 2.5) <= 5 * deviation[1]


def test_mle_boundary():
    """
    A chain of identical symbols drives theta to the search box.
    """
    scenario = make_scenario(2, 0, 6, 6, theta=2.0)
    family = ModelFamily(QuantizerFamily(2.0, 10.0), InjectionFamily(2.0, 10.0))
    attack = AttackSpec(1, [0.0], 0.0, family.attack(2.0, [0.0]))
    chain = ChainData(np.ones((2, 6), dtype=int), dsa_succeeded=False)
    estimate = mle_estimate(chain, scenario, attack, family, MleOptions(theta_bounds=(-10.0, 10.0)))
    assert estimate.at_boundary
    assert estimate.theta_hat == pytest.approx(10.0)


def test_mle_flat_likelihood(honest_only):
    """
    A family that does not depend on theta is unidentifiable.
    """
    scenario, _, attack = honest_only
    flat = ModelFamily(NumericFamily(lambda theta, xi: np.array([0.5, 0.5]), dimension=0), InjectionFamily(2.0))
    chain = ChainData(np.zeros((2, 6), dtype=int), dsa_succeeded=False)
    with pytest.raises(UnidentifiableError):
        mle_estimate(chain, scenario, attack, flat)


def test_mse_experiment(honest_only):
    """
    Unit tests for mse_experiment function.
    """
    scenario, family, attack = honest_only
    first = mse_experiment(scenario, attack, family, trials=2, seed=4, chains=20)
    second = mse_experiment(scenario, attack, family, trials=2, seed=4, chains=20, threads=2)
    assert first == second
    assert first.theta_mse >= 0.0
    assert first.xi_mse == 0.0

    with pytest.raises(InvalidParameterError):
        mse_experiment(scenario, attack, family, trials=1, seed=4)
    with pytest.raises(InvalidParameterError):
        mse_experiment(scenario, attack, family, trials=2, seed=4, chains=0)


def test_mse_reaches_crb(honest_only):
    """
    The MSE of an efficient estimator is not below the CRB beyond sampling error.
    """
    scenario, family, attack = honest_only
    report = mse_experiment(scenario, attack, family, trials=200, seed=12, chains=50)
    assert report.ratio >= 1.0 - 3.0 * report.ratio_stderr
    assert report.crb_theta == pytest.approx(1.0 / (50 * 12 * 8.0 / np.pi))


def test_mse_ratio_trend():
    """
    With a rare symbol 0 (threshold two noise deviations below theta), short records
    often lack it and the MLE runs far above theta: MSE/CRB falls toward 1 as the
    number of chains per estimate grows over 10, 50 and 200.
    """
    scenario = make_scenario(2, 0, 6, 6, theta=2.0)
    family = ModelFamily(QuantizerFamily(1.0, 0.5), InjectionFamily(1.0, 0.5))
    attack = AttackSpec(1, [0.0], 0.0, family.attack(2.0, [0.0]))
    reports = [
        mse_experiment(scenario, attack, family, trials=200, seed=21, chains=chains)
        for chains in (10, 50, 200)
    ]
    for report in reports:
        assert report.ratio >= 1.0 - 3.0 * report.ratio_stderr

    short, medium, long = reports
    assert short.ratio > 2.0
    assert short.ratio > medium.ratio
    assert long.ratio <= medium.ratio + 3.0 * np.hypot(medium.ratio_stderr, long.ratio_stderr)
    assert abs(long.ratio - 1.0) <= 3.0 * long.ratio_stderr + 0.05
