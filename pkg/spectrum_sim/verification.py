"""
Property and directional checks behind the ``verify`` command.

Every check returns a CheckResult; the CLI prints one PASS/FAIL line per check.
Structural checks run on small random instances in seconds to minutes; the
directional checks run full experiments and are opt-in.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config import Config, SimConfig
from spectrum_sim.features.analytics import compute_distributions, paired_win_rate, stochastically_dominates
from spectrum_sim.features.channel import sample_deployment
from spectrum_sim.features.learning import AgentStep, boltzmann_probabilities, learning_rate, q_update
from spectrum_sim.features.matching import (
    AnalyticDesirability,
    GameSpec,
    TabulatedDesirability,
    enumerate_optimal,
    evaluate_state,
    greedy_swap,
    mcmc,
    random_matching,
)
from spectrum_sim.features.rates import expected_rate_ppp, mean_sqrt_power, simulate_ppp_rate
from spectrum_sim.harness import run_experiment, run_sweep

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ''

    def line(self) -> str:
        status = 'PASS' if self.passed else 'FAIL'
        return f"{self.name}: {status}" + (f" ({self.detail})" if self.detail else '')


# ── Instance generators ──────────────────────────────────────────────────────

def random_instance(
    rng: np.random.Generator,
    max_children: int = 6,
    max_rbs: int = 4,
    max_capacity: int = 2,
    max_quota: int = 2,
    unit_weights: bool = False,
) -> Tuple[GameSpec, TabulatedDesirability]:
    """
    Random small game with positive desirabilities depending on (operator, RB).

    With quotas of at most two RBs, an approved swap can never push a child
    next to a sibling, so the potential argument holds exactly.
    """
    num_rbs = int(rng.integers(2, max_rbs + 1))
    capacity = tuple(int(b) for b in rng.integers(1, max_capacity + 1, size=num_rbs))
    target = int(rng.integers(2, min(sum(capacity), max_children) + 1))
    quota: List[int] = []
    while sum(quota) < target:
        quota.append(min(int(rng.integers(1, max_quota + 1)), target - sum(quota)))
    weights = (1.0,) * len(quota) if unit_weights else tuple(float(w) for w in rng.uniform(0.5, 2.0, len(quota)))
    table = rng.uniform(0.1, 5.0, size=(len(quota), num_rbs))
    return GameSpec(tuple(quota), capacity, weights), TabulatedDesirability.from_array(table)


def crowding_instance(seed: int = 0) -> Tuple[GameSpec, TabulatedDesirability]:
    """Five children over three RBs; desirability falls with every co-occupant."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(1.0, 4.0, size=(3, 3))
    spec = GameSpec(quota=(2, 2, 1), rb_capacity=(2, 2, 2), op_weight=(1.0, 1.0, 1.0))
    return spec, TabulatedDesirability(lambda parent, rb, co: base[parent, rb] / (1.0 + 0.5 * (len(co) - 1)))


def small_config(**overrides) -> SimConfig:
    values = dict(rb_quota=(1, 2), num_rbs=3, rb_capacity=(2, 2, 2), op_weight=(1.0, 1.0),
                  sbs_per_op=2, fade_draws=16, samples=1)
    values.update(overrides)
    return SimConfig(**values)


# ── Structural checks ────────────────────────────────────────────────────────

def check_local_maxima_stable(instances: int = 50, seed: int = 0) -> CheckResult:
    """Every local maximum of the potential is pairwise stable."""
    rng = np.random.default_rng(seed)
    counterexamples = maxima = 0
    for _ in range(instances):
        spec, model = random_instance(rng)
        ledger = enumerate_optimal(spec, model).ledger
        local = ledger[ledger['local_max_potential']]
        maxima += len(local)
        counterexamples += int((~local['pairwise_stable']).sum())
    return CheckResult('theorem1', counterexamples == 0,
                       f"{maxima} local maxima over {instances} instances, {counterexamples} unstable")


def check_welfare_maxima_stable(instances: int = 50, seed: int = 1) -> CheckResult:
    """On collision-free games with unit weights, local maxima of S are pairwise stable."""
    rng = np.random.default_rng(seed)
    counterexamples = maxima = 0
    for _ in range(instances):
        spec, model = random_instance(rng, max_quota=1, unit_weights=True)
        ledger = enumerate_optimal(spec, model).ledger
        local = ledger[ledger['collision_free'] & ledger['local_max_welfare']]
        maxima += len(local)
        counterexamples += int((~local['pairwise_stable']).sum())
    return CheckResult('corollary1', counterexamples == 0,
                       f"{maxima} local maxima over {instances} instances, {counterexamples} unstable")


def check_swaps_raise_potential(min_swaps: int = 10_000, seed: int = 2) -> CheckResult:
    """Every swap greedy_swap applies strictly raises the potential."""
    rng = np.random.default_rng(seed)
    swaps = drops = runs = 0
    while swaps < min_swaps:
        spec, model = random_instance(rng, max_children=10, max_rbs=6, max_capacity=3)
        run = greedy_swap(evaluate_state(random_matching(spec, rng), model), model, rng)
        steps = np.diff(run.potential_trace)
        drops += int(np.count_nonzero(steps <= 0))
        swaps += run.swaps
        runs += 1
    return CheckResult('lemma2', drops == 0, f"{swaps} swaps over {runs} runs, {drops} without a potential gain")


def check_bystanders_unchanged(trials: int = 200, seed: int = 3) -> CheckResult:
    """Under the count-only model no swap between two children moves a bystander's D."""
    rng = np.random.default_rng(seed)
    cfg = small_config(rb_quota=(1, 2, 2), op_weight=(1.0, 1.0, 1.0), power_mode='uniform')
    dep = sample_deployment(cfg, rng)
    model = AnalyticDesirability(dep, cfg)
    spec = GameSpec.from_config(cfg)
    changed = tried = 0
    for _ in range(trials):
        state = evaluate_state(random_matching(spec, rng), model)
        a, b = rng.choice(spec.num_children, size=2, replace=False)
        if state.matching.rb_of(a) == state.matching.rb_of(b):
            continue
        after = evaluate_state(state.matching.swapped(a, b), model)
        bystanders = [k for k in range(spec.num_children) if k not in (a, b)]
        changed += int(np.any(after.desirability[bystanders] != state.desirability[bystanders]))
        tried += 1
    return CheckResult('lemma1', changed == 0, f"{tried} swaps, {changed} with a changed bystander")


def check_mcmc_optimality(seeds: int = 100, iterations: int = 2000, share: float = 0.95) -> CheckResult:
    """MCMC's best welfare is within 1% of the exhaustive optimum on most seeds."""
    spec, model = crowding_instance()
    optimum = enumerate_optimal(spec, model).best_welfare.welfare
    hits = 0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        run = mcmc(evaluate_state(random_matching(spec, rng), model), model, rng, iterations, Config.TEMP_TB)
        hits += int(run.state.welfare >= 0.99 * optimum)
    return CheckResult('mcmc_optimality', hits >= share * seeds, f"{hits}/{seeds} runs within 1% of {optimum:.4f}")


EXPECTED_RATE_POINTS = ((0.01, 3.0), (0.02, 2.0), (0.05, 1.0))


def check_expected_rate(realizations: int = 100_000, seed: int = 4, tolerance: float = 0.05) -> CheckResult:
    """Closed-form PPP rate against a Monte Carlo PPP at three (intensity, distance) points."""
    cfg = SimConfig()
    levels = cfg.power_quantum * np.arange(1, cfg.num_power_levels + 1)
    pmf = np.full(levels.size, 1.0 / levels.size)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for lam, r_ff in EXPECTED_RATE_POINTS:
        closed = expected_rate_ppp(lam, cfg.p_tot, mean_sqrt_power(levels, pmf), r_ff)
        simulated, _ = simulate_ppp_rate(lam, r_ff, cfg.p_tot, levels, pmf, rng, realizations=realizations)
        worst = max(worst, abs(closed - simulated) / simulated)
    return CheckResult('expected_rate', worst <= tolerance, f"worst relative error {worst:.3%}")


def check_softmax_limits() -> CheckResult:
    equal = boltzmann_probabilities(np.full(4, 1.7), 0.5)
    sharp = boltzmann_probabilities(np.array([0.0, 1.0, 0.5, 0.2]), 1e-4)
    ok = (np.allclose(equal, 0.25, atol=1e-6, rtol=0) and abs(sharp[1] - 1.0) <= 1e-6
          and abs(equal.sum() - 1.0) <= 1e-12)
    return CheckResult('softmax', bool(ok))


def check_bandit_convergence(steps: int = 10_000, seed: int = 5) -> CheckResult:
    """Single-state, myopic learning converges to the empirical mean reward."""
    rng = np.random.default_rng(seed)
    rewards = rng.exponential(2.0, size=steps)
    qt = np.zeros((2, 1))
    for t, r in enumerate(rewards, start=1):
        qt = q_update(qt, AgentStep(0, 1, float(r), 0), learning_rate(0.01, t), 0.0)
    error = abs(qt[0, 0] - rewards.mean()) / rewards.mean()
    return CheckResult('bandit', error <= 0.02, f"relative error {error:.3%}")


STRUCTURAL_CHECKS: Dict[str, Callable[[], CheckResult]] = {
    'theorem1': check_local_maxima_stable,
    'lemma2': check_swaps_raise_potential,
    'corollary1': check_welfare_maxima_stable,
    'lemma1': check_bystanders_unchanged,
    'mcmc_optimality': check_mcmc_optimality,
    'expected_rate': check_expected_rate,
    'softmax': check_softmax_limits,
    'bandit': check_bandit_convergence,
}


def run_checks(names: Optional[List[str]] = None) -> List[CheckResult]:
    selected = names or list(STRUCTURAL_CHECKS)
    results = []
    for name in selected:
        logger.info(f"Running check {name}")
        results.append(STRUCTURAL_CHECKS[name]())
    return results


# ── Directional checks ───────────────────────────────────────────────────────

def check_power_mode_ordering(cfg: SimConfig, workers: Optional[int] = None) -> CheckResult:
    """median S: full power >= Q-learning >= uniform."""
    frames = {mode: run_experiment(cfg.with_overrides(power_mode=mode), workers).samples_frame()
              for mode in ('full', 'qlearning', 'uniform')}
    medians = {mode: stats.get('median', float('nan')) for mode, stats in compute_distributions(frames).items()}
    ok = medians['full'] >= medians['qlearning'] >= medians['uniform']
    return CheckResult('power_ordering', ok, ', '.join(f"{m}={v:.3f}" for m, v in medians.items()))


def check_welfare_grows_with_operators(cfg: SimConfig, workers: Optional[int] = None, tolerance: float = 0.02) -> CheckResult:
    """The welfare CDF improves as K grows over 3..6."""
    _, results = run_sweep(cfg, 'K', sorted(Config.QUOTAS_BY_NUM_OPS), workers=workers)
    ks = sorted(results)
    ok = all(stochastically_dominates(results[hi].welfare, results[lo].welfare, tolerance)
             for lo, hi in zip(ks, ks[1:]))
    return CheckResult('cdf_vs_K', ok, ', '.join(f"K={k}: median {np.median(results[k].welfare):.3f}" for k in ks))


def check_per_op_trends(cfg: SimConfig, workers: Optional[int] = None) -> CheckResult:
    """Per-operator welfare falls with K and rises with L."""
    by_k, _ = run_sweep(cfg, 'K', sorted(Config.AVERAGE_QUOTAS_BY_NUM_OPS), average_quotas=True, workers=workers)
    by_l, _ = run_sweep(cfg, 'L', (5, 8, 10, 14), workers=workers)
    ok = bool(np.all(np.diff(by_k['per_op_S']) < 0) and np.all(np.diff(by_l['per_op_S']) > 0))
    return CheckResult('per_op_trends', ok,
                       f"by K {list(np.round(by_k['per_op_S'], 3))}, by L {list(np.round(by_l['per_op_S'], 3))}")


def check_solver_tradeoff(cfg: SimConfig, workers: Optional[int] = None, share: float = 0.6) -> CheckResult:
    """MCMC ends at least as high as greedy on most seeds; greedy needs fewer proposals."""
    greedy = run_experiment(cfg.with_overrides(solver='greedy'), workers)
    mcmc_cfg = cfg.with_overrides(solver='mcmc')
    chain = run_experiment(mcmc_cfg, workers)
    wins = paired_win_rate(chain.samples_frame(), greedy.samples_frame())
    mean_proposals = float(np.mean([s.proposals / max(s.rounds, 1) for s in greedy.samples]))
    ok = wins >= share and mean_proposals < mcmc_cfg.max_iterations
    return CheckResult('solver_tradeoff', ok,
                       f"MCMC >= greedy on {wins:.1%} of seeds; greedy {mean_proposals:.0f} proposals per pass")


def check_quota_dominance(cfg: SimConfig, workers: Optional[int] = None, tolerance: float = 0.02) -> CheckResult:
    """
    At L=10 welfare under the small quotas (2,2,1,1,2) stochastically
    dominates welfare under the large quotas (2,4,4,5,5).
    """
    base = cfg.with_overrides(num_rbs=10)
    _, results = run_sweep(base, 'c', [(2, 2, 1, 1, 2), (2, 4, 4, 5, 5)], workers=workers)
    small, large = results[(2, 2, 1, 1, 2)], results[(2, 4, 4, 5, 5)]
    ok = stochastically_dominates(small.welfare, large.welfare, tolerance)
    return CheckResult('quota_dominance', ok,
                       f"medians {np.median(small.welfare):.3f} vs {np.median(large.welfare):.3f}")


DIRECTIONAL_CHECKS: Dict[str, Callable[..., CheckResult]] = {
    'power_ordering': check_power_mode_ordering,
    'cdf_vs_K': check_welfare_grows_with_operators,
    'per_op_trends': check_per_op_trends,
    'solver_tradeoff': check_solver_tradeoff,
    'quota_dominance': check_quota_dominance,
}


def run_directional(cfg: SimConfig, workers: Optional[int] = None) -> List[CheckResult]:
    results = []
    for name, check in DIRECTIONAL_CHECKS.items():
        logger.info(f"Running directional check {name} with {cfg.samples} samples")
        results.append(check(cfg, workers))
    return results
