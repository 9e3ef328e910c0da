"""
Tests for spectrum_sim.features.analytics module.

Covers: empirical CDF, distribution stats, per-operator welfare,
paired win rates and stochastic dominance.
"""
import sys
import os
import pytest
import pandas as pd
import numpy as np

# Ensure project root is importable
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from spectrum_sim.features.analytics import (
    WELFARE_COL,
    compute_distribution,
    compute_distributions,
    paired_win_rate,
    per_op_welfare,
    stochastically_dominates,
    welfare_cdf,
)


# ── Fixtures ─────────────────────────────────────────────────────────────────

@pytest.fixture
def samples():
    """Per-sample welfare table for 200 seeds."""
    rng = np.random.default_rng(42)
    return pd.DataFrame({
        'sample_id': np.arange(200),
        'seed': np.arange(1000, 1200),
        WELFARE_COL: rng.gamma(4.0, 2.0, size=200),
    })


# ── 1. Empirical CDF ─────────────────────────────────────────────────────────

class TestWelfareCdf:
    def test_sorted_and_probabilities(self):
        cdf = welfare_cdf([3.0, 1.0, 2.0, 2.0])
        assert cdf['welfare'].tolist() == [1.0, 2.0, 2.0, 3.0]
        assert cdf['probability'].tolist() == pytest.approx([0.25, 0.5, 0.75, 1.0])

    def test_empty(self):
        cdf = welfare_cdf([])
        assert cdf.empty
        assert list(cdf.columns) == ['welfare', 'probability']

    def test_last_probability_is_one(self, samples):
        cdf = welfare_cdf(samples[WELFARE_COL])
        assert cdf['probability'].iloc[-1] == 1.0
        assert cdf['welfare'].is_monotonic_increasing


# ── 2. Distribution Statistics ───────────────────────────────────────────────

class TestDistributions:
    def test_returns_expected_keys(self, samples):
        stats = compute_distribution(samples[WELFARE_COL])
        for key in ['mean', 'std', 'min', 'q25', 'median', 'q75', 'max', 'count']:
            assert key in stats

    def test_quartiles_ordered(self, samples):
        stats = compute_distribution(samples[WELFARE_COL])
        assert stats['min'] <= stats['q25'] <= stats['median'] <= stats['q75'] <= stats['max']
        assert stats['count'] == 200

    def test_single_value(self):
        stats = compute_distribution([5.0])
        assert stats['std'] == 0.0
        assert stats['median'] == 5.0

    def test_empty(self):
        assert compute_distribution([]) == {'count': 0}

    def test_per_arm(self, samples):
        stats = compute_distributions({'full': samples, 'uniform': samples.assign(final_S=samples[WELFARE_COL] / 2)})
        assert stats['uniform']['mean'] == pytest.approx(stats['full']['mean'] / 2)

    def test_per_op_welfare(self):
        assert per_op_welfare([6.0, 12.0], 3) == pytest.approx(3.0)
        assert per_op_welfare([], 3) == 0.0


# ── 3. Paired Comparisons ────────────────────────────────────────────────────

class TestComparisons:
    def test_win_rate_against_self(self, samples):
        assert paired_win_rate(samples, samples) == 1.0
        assert paired_win_rate(samples, samples, ties_count=False) == 0.0

    def test_win_rate_matches_on_seed(self, samples):
        better = samples.assign(final_S=samples[WELFARE_COL] + 1.0).iloc[::-1]
        assert paired_win_rate(better, samples) == 1.0
        assert paired_win_rate(samples, better) == 0.0

    def test_win_rate_disjoint_seeds(self, samples):
        other = samples.assign(seed=samples['seed'] + 10_000)
        assert paired_win_rate(samples, other) == 0.0

    def test_shifted_sample_dominates(self, samples):
        values = samples[WELFARE_COL]
        assert stochastically_dominates(values + 0.5, values)
        assert not stochastically_dominates(values, values + 0.5)

    def test_dominance_tolerance(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        b = np.array([1.5, 2.5, 3.5, 3.9])
        assert not stochastically_dominates(a, b)
        assert stochastically_dominates(a, b, tolerance=0.25)

    def test_dominance_empty(self):
        assert not stochastically_dominates([], [1.0])
