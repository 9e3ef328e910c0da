"""
Tests for spectrum_sim.features.channel module.

Covers: deployment sampling, intensity, pathloss, gains and SINR.
"""
import sys
import os
import pytest
import numpy as np

# Ensure project root is importable
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from config import SimConfig
from spectrum_sim.errors import UsageError
from spectrum_sim.features.channel import (
    ChannelDraw,
    draw_channel,
    intensity,
    mean_gains,
    pathloss_db,
    sample_deployment,
    sinr,
    sinr_vector,
)


# ── Fixtures ─────────────────────────────────────────────────────────────────

@pytest.fixture
def cfg():
    return SimConfig()


@pytest.fixture
def dep(cfg):
    return sample_deployment(cfg, np.random.default_rng(11))


# ── 1. Deployment ────────────────────────────────────────────────────────────

class TestSampleDeployment:
    def test_shapes(self, dep, cfg):
        assert dep.sbs_pos.shape == (cfg.num_sbs, 2)
        assert dep.ue_pos.shape == (cfg.num_sbs, 2)
        assert dep.shadow_db.shape == (cfg.num_sbs, cfg.num_sbs)

    def test_operator_membership(self, dep, cfg):
        for op in range(cfg.num_ops):
            assert len(dep.members(op)) == cfg.sbs_per_op

    def test_inside_square(self, dep, cfg):
        for pos in (dep.sbs_pos, dep.ue_pos):
            assert (pos >= 0).all() and (pos <= cfg.area_side).all()

    def test_ue_near_serving_sbs(self, dep, cfg):
        assert (dep.serving_distances() <= cfg.ue_max_dist + 1e-9).all()

    def test_deterministic(self, cfg):
        a = sample_deployment(cfg, np.random.default_rng(5))
        b = sample_deployment(cfg, np.random.default_rng(5))
        assert np.array_equal(a.sbs_pos, b.sbs_pos)
        assert np.array_equal(a.shadow_db, b.shadow_db)

    def test_positions_uniform_over_square(self, cfg):
        rng = np.random.default_rng(21)
        positions = np.concatenate([sample_deployment(cfg, rng).sbs_pos for _ in range(10_000)])
        centre = cfg.area_side / 2
        assert np.allclose(positions.mean(axis=0), centre, rtol=0.01, atol=0)

    def test_distance_matrix_diagonal(self, dep):
        assert np.allclose(np.diag(dep.distances()), dep.serving_distances())

    def test_intensity(self, dep, cfg):
        assert intensity(dep, cfg) == pytest.approx(12 / 400)
        assert intensity(dep, cfg, num_ops=1) == pytest.approx(4 / 400)


# ── 2. Pathloss and gains ────────────────────────────────────────────────────

class TestPathloss:
    def test_reference_values(self, cfg):
        assert pathloss_db(1.0, cfg) == pytest.approx(37.0)
        assert pathloss_db(10.0, cfg) == pytest.approx(57.0)

    def test_clamps_short_distances(self, cfg):
        assert pathloss_db(0.0, cfg) == pytest.approx(pathloss_db(cfg.min_dist, cfg))

    def test_array_input(self, cfg):
        loss = pathloss_db(np.array([1.0, 10.0, 100.0]), cfg)
        assert np.allclose(np.diff(loss), 20.0)

    def test_wall_loss_only_when_enabled(self, cfg):
        assert pathloss_db(5.0, cfg, cross_wall=True) == pytest.approx(pathloss_db(5.0, cfg))
        walled = SimConfig(wall_model=True)
        assert pathloss_db(5.0, walled, cross_wall=True) == pytest.approx(pathloss_db(5.0, cfg) + 15.0)

    def test_mean_gains_without_shadowing(self):
        cfg = SimConfig(shadow_sigma=0.0)
        dep = sample_deployment(cfg, np.random.default_rng(3))
        expected = 10 ** (-pathloss_db(dep.distances(), cfg) / 10)
        assert np.allclose(mean_gains(dep, cfg), expected)

    def test_draw_channel_positive(self, dep, cfg):
        ch = draw_channel(dep, cfg, np.random.default_rng(0))
        assert ch.gains.shape == (cfg.num_sbs, cfg.num_sbs)
        assert (ch.gains > 0).all()

    def test_draw_channel_mean_matches_large_scale(self):
        cfg = SimConfig(rb_quota=(1,), op_weight=(1.0,), sbs_per_op=2)
        dep = sample_deployment(cfg, np.random.default_rng(8))
        rng = np.random.default_rng(9)
        total = np.zeros((dep.num_sbs, dep.num_sbs))
        draws = 100_000
        for _ in range(draws):
            total += draw_channel(dep, cfg, rng).gains
        expected = 10 ** (-(pathloss_db(dep.distances(), cfg) + dep.shadow_db) / 10)
        assert np.allclose(total / draws, expected, rtol=0.02, atol=0)

    def test_draw_channel_same_state_same_gains(self, dep, cfg):
        rng = np.random.default_rng(12)
        state = rng.bit_generator.state
        first = draw_channel(dep, cfg, rng).gains
        rng.bit_generator.state = state
        assert np.array_equal(draw_channel(dep, cfg, rng).gains, first)
        assert not np.array_equal(draw_channel(dep, cfg, rng).gains, first)


# ── 3. SINR ──────────────────────────────────────────────────────────────────

class TestSinr:
    def test_noise_only(self, cfg):
        gains = np.array([[1e-6, 1e-8], [1e-8, 1e-6]])
        ch = ChannelDraw(gains=gains)
        value = sinr(0, 0, [0.01, 0.01], {0: {0}, 1: {1}}, ch, cfg)
        assert value == pytest.approx(1e-6 * 0.01 / cfg.noise_power)

    def test_two_interferers(self, cfg):
        gains = np.array([[1e-6, 2e-8], [3e-8, 1e-6]])
        values = sinr_vector([0, 1], np.array([0.01, 0.005]), gains, cfg.noise_power)
        assert values[0] == pytest.approx(1e-6 * 0.01 / (0.005 * 3e-8 + cfg.noise_power))
        assert values[1] == pytest.approx(1e-6 * 0.005 / (0.01 * 2e-8 + cfg.noise_power))

    def test_interference_lowers_sinr(self, cfg):
        gains = np.full((2, 2), 1e-7)
        alone = sinr(0, 0, [0.01, 0.01], {0: {0}}, ChannelDraw(gains), cfg)
        shared = sinr(0, 0, [0.01, 0.01], {0: {0, 1}}, ChannelDraw(gains), cfg)
        assert shared < alone

    def test_common_scaling_leaves_sinr_unchanged(self, cfg):
        gains = np.array([[1e-6, 2e-8, 5e-9], [3e-8, 1e-6, 1e-8], [4e-9, 6e-8, 2e-6]])
        powers = np.array([0.01, 0.005, 0.0025])
        base = sinr_vector([0, 1, 2], powers, gains, cfg.noise_power)
        scaled = sinr_vector([0, 1, 2], 7.5 * powers, gains, 7.5 * cfg.noise_power)
        assert np.allclose(scaled, base, rtol=1e-12, atol=0)

    def test_inactive_sbs_raises(self, cfg):
        with pytest.raises(UsageError):
            sinr(1, 0, [0.01, 0.01], {0: {0}}, ChannelDraw(np.eye(2)), cfg)

    def test_zero_power_raises(self, cfg):
        with pytest.raises(UsageError):
            sinr(0, 0, [0.0, 0.01], {0: {0}}, ChannelDraw(np.eye(2)), cfg)

    def test_empty_rb(self, cfg):
        assert sinr_vector([], np.zeros(2), np.eye(2), cfg.noise_power).size == 0
