"""
Tests for spectrum_sim.features.matching module.

Covers: augmentation, matchings, desirability models, utilities, swaps,
the greedy and MCMC solvers, pairwise stability and exhaustive enumeration.
"""
import sys
import os
import math
import pytest
import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.special import exp1

# Ensure project root is importable
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from config import SimConfig
from spectrum_sim.errors import OracleTooLargeError, UsageError
from spectrum_sim.features.channel import mean_gains, sample_deployment
from spectrum_sim.features.matching import (
    AnalyticDesirability,
    GameSpec,
    Matching,
    SimulatedDesirability,
    TabulatedDesirability,
    acceptance_probability,
    apply_swap,
    augment,
    candidate_pairs,
    enumerate_optimal,
    evaluate_state,
    exchange_approved,
    greedy_swap,
    is_approved_swap,
    is_pairwise_stable,
    mcmc,
    random_matching,
    solve,
    utility,
)
from spectrum_sim.verification import random_instance


# ── Fixtures ─────────────────────────────────────────────────────────────────

@pytest.fixture
def two_by_two():
    """Two single-RB operators, two single-slot RBs; operator 0 prefers RB 0."""
    spec = GameSpec(quota=(1, 1), rb_capacity=(1, 1), op_weight=(1.0, 1.0))
    return spec, TabulatedDesirability.from_array([[3.0, 1.0], [1.0, 2.0]])


@pytest.fixture
def sibling_game():
    """Operator 0 has two children, operator 1 one; three RBs of two slots."""
    spec = GameSpec(quota=(2, 1), rb_capacity=(2, 2, 2), op_weight=(1.0, 1.0))
    return spec, TabulatedDesirability.from_array([[3.2, 2.0, 1.0], [1.5, 2.5, 0.5]])


@pytest.fixture
def small_cfg():
    return SimConfig(rb_quota=(1, 2, 2), op_weight=(1.0, 1.0, 1.0), num_rbs=3, rb_capacity=(2, 2, 2),
                     sbs_per_op=2, fade_draws=16, power_mode='uniform')


# ── 1. Augmentation ──────────────────────────────────────────────────────────

class TestAugment:
    def test_two_operators(self):
        children = augment([2, 3])
        assert len(children) == 5
        assert [c.parent_id for c in children] == [0, 0, 1, 1, 1]
        assert [c.sibling_index for c in children] == [0, 1, 0, 1, 2]

    def test_single(self):
        assert len(augment([1])) == 1

    def test_default_quota(self):
        assert len(augment([2, 3, 4])) == 9

    def test_zero_quota_rejected(self):
        with pytest.raises(UsageError):
            augment([1, 0])


# ── 2. Matchings ─────────────────────────────────────────────────────────────

class TestMatching:
    def test_from_assignment(self, sibling_game):
        spec, _ = sibling_game
        m = Matching.from_assignment(spec, [0, 1, 1])
        assert m.assignment == (0, 1, 1)
        assert m.occupancy == {0: frozenset({0}), 1: frozenset({1, 2}), 2: frozenset()}
        assert len(m.vacancy_slots) == spec.num_slots - spec.num_children
        m.validate()

    def test_over_capacity(self, two_by_two):
        spec, _ = two_by_two
        with pytest.raises(UsageError, match='capacity'):
            Matching.from_assignment(spec, [0, 0])

    def test_unknown_rb(self, two_by_two):
        spec, _ = two_by_two
        with pytest.raises(UsageError):
            Matching.from_assignment(spec, [0, 5])

    def test_slots_must_be_permutation(self, two_by_two):
        spec, _ = two_by_two
        with pytest.raises(UsageError):
            Matching(spec, [0, 0])

    def test_held_rbs_and_co_parents(self, sibling_game):
        spec, _ = sibling_game
        m = Matching.from_assignment(spec, [0, 2, 2])
        assert m.held_rbs(0) == frozenset({0, 2})
        assert m.co_parents(2) == (0, 1)
        assert m.co_parents(1) == ()

    def test_equality_ignores_slot_order(self, sibling_game):
        spec, _ = sibling_game
        a = Matching.from_assignment(spec, [0, 1, 2])
        b = a.swapped(0, 3)  # child 0 with the vacancy sharing RB 0
        assert b.slots != a.slots
        assert b == a
        assert hash(b) == hash(a)

    def test_random_matching_feasible(self, sibling_game):
        spec, _ = sibling_game
        rng = np.random.default_rng(0)
        for _ in range(20):
            random_matching(spec, rng).validate()

    def test_spec_from_config(self):
        spec = GameSpec.from_config(SimConfig())
        assert spec.num_children == 9
        assert spec.num_slots == 20
        assert spec.siblings(1) == (2, 3, 4)


# ── 3. Utilities ─────────────────────────────────────────────────────────────

class TestUtility:
    def test_lone_child(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [0, 1, 2]), model)
        assert utility(0, state) == pytest.approx(3.2)

    def test_siblings_on_one_rb(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [0, 0, 1]), model)
        assert utility(0, state) == 0.0
        assert utility(1, state) == 0.0
        assert utility(2, state) == pytest.approx(2.5)
        assert state.collisions == 2

    def test_vacancy(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [0, 1, 2]), model)
        assert utility(spec.num_children, state) == 0.0

    def test_potential_and_welfare(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [0, 1, 1]), model)
        assert state.potential == pytest.approx(3.2 + 2.0 + 2.5)
        assert state.welfare == pytest.approx(state.potential)


# ── 4. Swaps ─────────────────────────────────────────────────────────────────

class TestSwaps:
    @pytest.mark.parametrize('before, after, expected', [
        ((2.0, 1.0), (3.0, 1.0), True),
        ((2.0, 1.0), (2.0, 1.0), False),
        ((2.0, 1.0), (3.0, 0.5), False),
    ])
    def test_exchange_criterion(self, before, after, expected):
        assert exchange_approved(before, after) is expected

    def test_involution(self, small_cfg):
        rng = np.random.default_rng(2)
        dep = sample_deployment(small_cfg, rng)
        model = SimulatedDesirability(dep, small_cfg, seed=9)
        spec = GameSpec.from_config(small_cfg)
        state = evaluate_state(random_matching(spec, rng), model)
        for a, b in candidate_pairs(spec):
            back = apply_swap(apply_swap(state, a, b, model), a, b, model)
            assert back.matching == state.matching
            assert back.potential == pytest.approx(state.potential)

    def test_same_player_is_noop(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [0, 1, 2]), model)
        assert apply_swap(state, 1, 1, model) is state

    def test_occupancy_sizes_preserved(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [0, 1, 1]), model)
        after = apply_swap(state, 0, 2, model)
        assert sorted(after.matching.occupancy_sizes()) == sorted(state.matching.occupancy_sizes())
        assert after.matching.assignment == (1, 1, 0)

    def test_bystander_on_other_rb_unchanged(self, small_cfg):
        rng = np.random.default_rng(3)
        dep = sample_deployment(small_cfg, rng)
        model = SimulatedDesirability(dep, small_cfg, seed=1)
        spec = GameSpec.from_config(small_cfg)
        # operator 0 on RB 0; operators 1 and 2 share RBs 1 and 2
        state = evaluate_state(Matching.from_assignment(spec, [0, 1, 2, 1, 2]), model)
        after = apply_swap(state, 1, 4, model)  # operators 1 and 2 trade RBs 1 and 2
        assert utility(0, after) == utility(0, state)

    def test_incremental_matches_full_evaluation(self, small_cfg):
        rng = np.random.default_rng(4)
        dep = sample_deployment(small_cfg, rng)
        model = SimulatedDesirability(dep, small_cfg, seed=5)
        spec = GameSpec.from_config(small_cfg)
        state = evaluate_state(random_matching(spec, rng), model)
        for a, b in candidate_pairs(spec):
            fast = apply_swap(state, a, b, model)
            full = evaluate_state(fast.matching, model)
            assert np.array_equal(fast.desirability, full.desirability)
            assert fast.welfare == pytest.approx(full.welfare)

    def test_count_only_model_keeps_bystanders(self, small_cfg):
        rng = np.random.default_rng(6)
        dep = sample_deployment(small_cfg, rng)
        model = AnalyticDesirability(dep, small_cfg)
        spec = GameSpec.from_config(small_cfg)
        for _ in range(30):
            state = evaluate_state(random_matching(spec, rng), model)
            a, b = (int(x) for x in rng.choice(spec.num_children, size=2, replace=False))
            after = evaluate_state(state.matching.swapped(a, b), model)
            for k in range(spec.num_children):
                if k not in (a, b):
                    assert after.desirability[k] == state.desirability[k]

    def test_approved_swap(self, two_by_two):
        spec, model = two_by_two
        state = evaluate_state(Matching.from_assignment(spec, [1, 0]), model)
        assert is_approved_swap(state, 0, 1, model)
        assert not is_pairwise_stable(state, model)


# ── 5. Desirability ──────────────────────────────────────────────────────────

class TestDesirability:
    def test_noise_only_closed_form(self):
        cfg = SimConfig(rb_quota=(1,), op_weight=(1.0,), num_rbs=1, rb_capacity=(1,), sbs_per_op=1,
                        qos_gate=False, power_mode='full', fade_draws=20_000)
        dep = sample_deployment(cfg, np.random.default_rng(12))
        spec = GameSpec.from_config(cfg)
        d = SimulatedDesirability(dep, cfg, seed=3)(0, 0, Matching.from_assignment(spec, [0]))
        snr = mean_gains(dep, cfg)[0, 0] * cfg.p_tot / cfg.noise_power
        expected = math.exp(1 / snr) * exp1(1 / snr) / math.log(2)
        assert d == pytest.approx(expected, rel=0.01)

    def test_zero_sbs_weight(self):
        cfg = SimConfig(rb_quota=(1,), op_weight=(1.0,), num_rbs=1, rb_capacity=(1,), sbs_weight=0.0)
        dep = sample_deployment(cfg, np.random.default_rng(1))
        spec = GameSpec.from_config(cfg)
        assert SimulatedDesirability(dep, cfg)(0, 0, Matching.from_assignment(spec, [0])) == 0.0

    def test_co_occupant_does_not_help(self):
        cfg = SimConfig(rb_quota=(1, 1), op_weight=(1.0, 1.0), num_rbs=2, rb_capacity=(2, 2),
                        power_mode='full', fade_draws=256)
        spec = GameSpec.from_config(cfg)
        alone, shared = [], []
        for seed in range(10):
            dep = sample_deployment(cfg, np.random.default_rng(seed))
            model = SimulatedDesirability(dep, cfg, seed=seed)
            alone.append(model(0, 0, Matching.from_assignment(spec, [0, 1])))
            shared.append(model(0, 0, Matching.from_assignment(spec, [0, 0])))
        assert np.mean(shared) < np.mean(alone)

    def test_order_independent(self, small_cfg):
        dep = sample_deployment(small_cfg, np.random.default_rng(7))
        spec = GameSpec.from_config(small_cfg)
        m1 = Matching.from_assignment(spec, [0, 1, 2, 1, 2])
        m2 = Matching.from_assignment(spec, [1, 0, 2, 2, 1])
        first = SimulatedDesirability(dep, small_cfg, seed=2)
        second = SimulatedDesirability(dep, small_cfg, seed=2)
        a = first(0, 0, m1)
        first(1, 0, m2)
        second(1, 0, m2)
        assert second(0, 0, m1) == a
        assert first.cache_size == 2

    def test_analytic_falls_with_crowding(self, small_cfg):
        dep = sample_deployment(small_cfg, np.random.default_rng(8))
        spec = GameSpec.from_config(small_cfg)
        model = AnalyticDesirability(dep, small_cfg)
        alone = model(0, 0, Matching.from_assignment(spec, [0, 1, 2, 1, 2]))
        crowded = model(0, 0, Matching.from_assignment(spec, [0, 0, 2, 1, 2]))
        assert crowded < alone


# ── 6. Solvers ───────────────────────────────────────────────────────────────

class TestGreedySwap:
    def test_reaches_stable_matching(self, two_by_two):
        spec, model = two_by_two
        state = evaluate_state(Matching.from_assignment(spec, [1, 0]), model)
        run = greedy_swap(state, model, np.random.default_rng(0))
        assert run.state.matching.assignment == (0, 1)
        assert run.exhausted
        assert is_pairwise_stable(run.state, model)

    def test_stable_input_unchanged(self, two_by_two):
        spec, model = two_by_two
        state = evaluate_state(Matching.from_assignment(spec, [0, 1]), model)
        run = greedy_swap(state, model, np.random.default_rng(0))
        assert run.swaps == 0
        assert run.state is state

    def test_potential_strictly_increases(self):
        rng = np.random.default_rng(10)
        swaps = 0
        while swaps < 1000:
            spec, model = random_instance(rng, max_children=10, max_rbs=6, max_capacity=3)
            run = greedy_swap(evaluate_state(random_matching(spec, rng), model), model, rng)
            assert np.all(np.diff(run.potential_trace) > 0)
            assert run.potential_drops == 0
            swaps += run.swaps

    def test_terminates_within_matching_count(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            spec, model = random_instance(rng)
            total = len(enumerate_optimal(spec, model).states)
            run = greedy_swap(evaluate_state(random_matching(spec, rng), model), model, rng)
            assert run.exhausted
            assert run.swaps < total
            assert is_pairwise_stable(run.state, model)

    def test_iteration_cap(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [2, 2, 0]), model)
        run = greedy_swap(state, model, np.random.default_rng(0), max_iterations=0)
        assert run.swaps == 0 and not run.exhausted


class TestMcmc:
    def test_acceptance_probability(self):
        assert acceptance_probability(0.0, 1.0) == 0.5
        assert acceptance_probability(1.0, 1e6) == pytest.approx(1.0)
        assert acceptance_probability(-1.0, 1e6) == pytest.approx(0.0)

    def test_best_is_non_decreasing(self, sibling_game):
        spec, model = sibling_game
        rng = np.random.default_rng(1)
        run = mcmc(evaluate_state(random_matching(spec, rng), model), model, rng, max_iterations=300)
        assert np.all(np.diff(run.welfare_trace) >= 0)
        assert run.state.welfare == run.welfare_trace[-1]
        assert run.proposals == 300

    def test_finds_optimum(self, sibling_game):
        spec, model = sibling_game
        optimum = enumerate_optimal(spec, model).best_welfare.welfare
        rng = np.random.default_rng(2)
        run = mcmc(evaluate_state(random_matching(spec, rng), model), model, rng, max_iterations=500, temp_tb=1.0)
        assert run.state.welfare == pytest.approx(optimum)

    def test_bad_temperature(self, sibling_game):
        spec, model = sibling_game
        state = evaluate_state(Matching.from_assignment(spec, [0, 1, 2]), model)
        with pytest.raises(UsageError):
            mcmc(state, model, np.random.default_rng(0), temp_tb=0.0)

    def test_single_slot_game(self):
        spec = GameSpec(quota=(1,), rb_capacity=(1,), op_weight=(1.0,))
        model = TabulatedDesirability.from_array([[2.0]])
        state = evaluate_state(Matching.from_assignment(spec, [0]), model)
        run = mcmc(state, model, np.random.default_rng(0), max_iterations=10)
        assert run.proposals == 0
        assert run.iterations == 0
        assert run.state.welfare == state.welfare

    def test_solve_dispatch(self, small_cfg, two_by_two):
        spec, model = two_by_two
        state = evaluate_state(Matching.from_assignment(spec, [1, 0]), model)
        greedy = solve(state, model, small_cfg.with_overrides(solver='greedy'), np.random.default_rng(0))
        assert greedy.exhausted
        chain = solve(state, model, small_cfg.with_overrides(max_iterations=50), np.random.default_rng(0))
        assert chain.proposals == 50


# ── 7. Enumeration ───────────────────────────────────────────────────────────

class TestEnumerateOptimal:
    def test_single_matching(self):
        spec = GameSpec(quota=(1,), rb_capacity=(1,), op_weight=(1.0,))
        result = enumerate_optimal(spec, TabulatedDesirability.from_array([[2.0]]))
        assert len(result.ledger) == 1
        assert result.ledger['pairwise_stable'].all()
        assert result.ledger['local_max_potential'].all()

    def test_exclusive_count(self, two_by_two):
        spec, model = two_by_two
        result = enumerate_optimal(spec, model)
        # two children on two single-slot RBs: L! / (L - n)! complete assignments
        assert len(result.ledger) == math.perm(2, 2)
        assert result.best_welfare.matching.assignment == (0, 1)

    def test_refuses_large_instances(self):
        spec = GameSpec(quota=(2, 3, 4), rb_capacity=(4,) * 5, op_weight=(1.0,) * 3)
        with pytest.raises(OracleTooLargeError):
            enumerate_optimal(spec, TabulatedDesirability(lambda parent, rb, co: 1.0))

    def test_ties_keep_lowest_assignment(self):
        spec = GameSpec(quota=(1, 1), rb_capacity=(1, 1), op_weight=(1.0, 1.0))
        result = enumerate_optimal(spec, TabulatedDesirability(lambda parent, rb, co: 1.0))
        assert result.best_welfare.matching.assignment == (0, 1)

    def test_optimum_is_stable(self, sibling_game):
        spec, model = sibling_game
        result = enumerate_optimal(spec, model)
        assert is_pairwise_stable(result.best_potential, model)

    def test_ledger_matches_stability_check(self, sibling_game):
        spec, model = sibling_game
        result = enumerate_optimal(spec, model)
        for row in result.ledger.itertuples():
            assert row.pairwise_stable == is_pairwise_stable(result.states[row.assignment], model)

    def test_local_maxima_are_stable(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            spec, model = random_instance(rng)
            ledger = enumerate_optimal(spec, model).ledger
            assert ledger.loc[ledger['local_max_potential'], 'pairwise_stable'].all()

    def test_collision_free_welfare_maxima_are_stable(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            spec, model = random_instance(rng, max_quota=1, unit_weights=True)
            ledger = enumerate_optimal(spec, model).ledger
            assert ledger['collision_free'].all()
            assert ledger.loc[ledger['local_max_welfare'], 'pairwise_stable'].all()


# ── 8. Properties ────────────────────────────────────────────────────────────

class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_potential_maxima_are_stable(self, seed):
        spec, model = random_instance(np.random.default_rng(seed))
        result = enumerate_optimal(spec, model)
        assert is_pairwise_stable(result.best_potential, model)
        ledger = result.ledger
        assert ledger.loc[ledger['local_max_potential'], 'pairwise_stable'].all()

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_greedy_swaps_raise_potential(self, seed):
        rng = np.random.default_rng(seed)
        spec, model = random_instance(rng, max_children=10, max_rbs=6, max_capacity=3)
        run = greedy_swap(evaluate_state(random_matching(spec, rng), model), model, rng)
        assert np.all(np.diff(run.potential_trace) > 0)
        assert run.exhausted

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), data=st.data())
    def test_swap_keeps_feasibility(self, seed, data):
        rng = np.random.default_rng(seed)
        spec, model = random_instance(rng, max_children=10, max_rbs=6, max_capacity=3)
        state = evaluate_state(random_matching(spec, rng), model)
        a, b = data.draw(st.sampled_from(candidate_pairs(spec)))
        after = apply_swap(state, a, b, model)
        after.matching.validate()
        assert sorted(after.matching.occupancy_sizes()) == sorted(state.matching.occupancy_sizes())
