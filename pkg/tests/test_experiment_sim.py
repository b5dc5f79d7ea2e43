import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bellwigner.experiment_sim import (
    MAX_TRIALS,
    Assignment,
    CountTable,
    EmptyConfigurationError,
    Normalization,
    TrialConfig,
    configuration_probabilities,
    difference_estimates,
    estimate_pair,
    estimated_bell_margin,
    estimator_bell_check,
    estimator_bell_check_batch,
    simulate_counts,
)
from bellwigner.quantum_model import PAIRS, AngleConfig, expected_product, pair_distribution

CFG = AngleConfig.from_degrees(0, 60, 90)
tables = arrays(np.int64, (3, 4), elements=st.integers(0, 10 ** 6))


def test_single_trial():
    ct = simulate_counts(TrialConfig(CFG, 1, seed=3))
    assert ct.N == 1
    assert np.count_nonzero(ct.n) == 1


def test_zero_agreement_configuration():
    ct = simulate_counts(TrialConfig(AngleConfig(), 3000, seed=1))
    for pair in PAIRS:
        assert ct.count(pair, (1, 1)) == ct.count(pair, (-1, -1)) == 0


def test_determinism_and_seed_dependence():
    tc = TrialConfig(CFG, 10_000, Assignment.RANDOM_UNIFORM, seed=2 ** 64 - 1)
    assert np.array_equal(simulate_counts(tc).n, simulate_counts(tc).n)
    other = TrialConfig(CFG, 10_000, Assignment.RANDOM_UNIFORM, seed=5)
    assert not np.array_equal(simulate_counts(tc).n, simulate_counts(other).n)


def test_trial_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(CFG, 0)
    with pytest.raises(ValueError):
        TrialConfig(CFG, MAX_TRIALS + 1)
    with pytest.raises(ValueError):
        TrialConfig(CFG, 10, seed=-1)
    with pytest.raises(ValueError):
        TrialConfig(CFG, 10, Assignment.WEIGHTED)
    with pytest.raises(ValueError):
        TrialConfig(CFG, 10, "weighted", weights=(0.5, 0.5, 0.5))


def test_per_config_estimates_within_three_sigma():
    n = 100_000
    ct = simulate_counts(TrialConfig(CFG, 3 * n, seed=11))
    for pair in PAIRS:
        d = pair_distribution(CFG, pair)
        est = estimate_pair(ct, pair)
        for o, p in d.as_dict().items():
            sigma = math.sqrt(p * (1 - p) / n)
            assert abs(float(est.probabilities[o]) - p) <= 3 * sigma + 1e-12
        e = expected_product(d)
        sigma_e = math.sqrt((1 - e * e) / n)
        assert abs(float(est.expected_product) - e) <= 3 * sigma_e + 1e-12


def test_quarter_turn_estimate():
    n = 100_000
    ct = simulate_counts(TrialConfig(AngleConfig.from_degrees(0, 60, 0), 3 * n, seed=9))
    e = float(estimate_pair(ct, (1, 2)).expected_product)
    assert abs(e - 0.5) <= 3 * math.sqrt(0.75 / n)


def test_weighted_configuration_probabilities():
    n = 100_000
    w = (0.5, 0.3, 0.2)
    ct = simulate_counts(TrialConfig(CFG, n, "weighted", seed=1, weights=w))
    for got, want in zip(configuration_probabilities(ct), w):
        assert abs(float(got) - want) <= 3 * math.sqrt(want * (1 - want) / n)


def test_equal_split_probabilities():
    ct = simulate_counts(TrialConfig(CFG, 300, seed=0))
    assert configuration_probabilities(ct) == (Fraction(1, 3),) * 3


def test_estimator_examples():
    ct = CountTable.from_mapping({((1, 2), (1, 1)): 7})
    assert estimate_pair(ct, (1, 2)).expected_product == 1
    assert configuration_probabilities(ct) == (1, 0, 0)
    with pytest.raises(EmptyConfigurationError, match=r"\(1, 3\)"):
        estimate_pair(ct, (1, 3), Normalization.PER_CONFIG_N)
    # over the grand total an empty configuration simply estimates zero
    assert estimate_pair(ct, (1, 3), Normalization.GLOBAL_N).expected_product == 0
    assert estimator_bell_check(ct) == (7, 7, -7)
    flat = CountTable.from_mapping({((1, 3), o): 1 for o in ((1, 1), (1, -1), (-1, 1), (-1, -1))})
    assert estimate_pair(flat, (1, 3)).expected_product == 0
    with pytest.raises(EmptyConfigurationError):
        configuration_probabilities(CountTable(np.zeros((3, 4))))
    with pytest.raises(EmptyConfigurationError):
        estimate_pair(CountTable(np.zeros((3, 4))), (1, 2), "global_N")


@settings(max_examples=300)
@given(tables)
def test_estimator_inequality_any_table(n):
    ct = CountTable(n)
    N, plus, minus = estimator_bell_check(ct)
    assert N >= plus and N >= minus
    assert N == sum(ct.config_total(p) for p in PAIRS)
    if N:
        assert sum(configuration_probabilities(ct)) == 1
        assert estimated_bell_margin(ct, "global_N") >= 0


@settings(max_examples=200)
@given(tables)
def test_normalizations_compose_exactly(n):
    ct = CountTable(n)
    for pair in PAIRS:
        if ct.config_total(pair) == 0:
            continue
        per = estimate_pair(ct, pair, "per_config_n")
        glob = estimate_pair(ct, pair, "global_N")
        weight = Fraction(ct.config_total(pair), ct.N)
        assert per.expected_product * weight == glob.expected_product
        assert sum(per.probabilities.values()) == 1
        for o in per.probabilities:
            assert per.probabilities[o] * weight == glob.probabilities[o]


def test_batch_matches_scalar():
    rng = np.random.default_rng(0)
    n = rng.integers(0, 50, (500, 3, 4))
    N, plus, minus = estimator_bell_check_batch(n)
    for i in range(len(n)):
        assert (N[i], plus[i], minus[i]) == estimator_bell_check(CountTable(n[i]))


def test_difference_estimates_disagree_when_unbalanced():
    ct = CountTable.from_mapping({((1, 2), (1, 1)): 3, ((2, 3), (1, -1)): 1, ((1, 3), (1, 1)): 2})
    d = difference_estimates(ct)
    assert d["per_config_difference"] == 2
    assert d["over_n_first"] == Fraction(4, 3)
    assert d["over_n_second"] == 4
    assert d["pooled"] == 1
    assert d["global_N"] == Fraction(4, 6)
    assert "over_n_first" not in difference_estimates(CountTable(np.zeros((3, 4))))


def test_csv_round_trip_and_format():
    ct = simulate_counts(TrialConfig(CFG, 1234, "random_uniform", seed=42))
    text = ct.to_csv()
    lines = text.splitlines()
    assert lines[0] == "config,zj,zk,count"
    assert lines[-1] == "TOTAL,,,1234"
    assert len(lines) == 14
    assert np.array_equal(CountTable.from_csv(text).n, ct.n)
    with pytest.raises(ValueError):
        CountTable.from_csv(text.replace("TOTAL,,,1234", "TOTAL,,,1"))
    with pytest.raises(ValueError):
        CountTable.from_csv("a,b\n")


def test_violation_reproduced_only_per_config():
    n = 100_000
    ct = simulate_counts(TrialConfig(CFG, 3 * n, seed=123))
    assert estimated_bell_margin(ct, "per_config_n") < -0.5
    assert estimated_bell_margin(ct, "global_N") >= 0


def test_count_table_rejects_negative():
    with pytest.raises(ValueError):
        CountTable(-np.ones((3, 4)))
    a = CountTable(np.ones((3, 4)))
    assert (a + a).N == 24
