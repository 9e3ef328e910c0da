"""
Experiment Harness
Runs the matching <-> power-learning loop per sample and aggregates samples.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import Config, SimConfig
from spectrum_sim.errors import SimulationError, UsageError
from spectrum_sim.features.analytics import compute_distribution, per_op_welfare, welfare_cdf
from spectrum_sim.features.channel import sample_deployment
from spectrum_sim.features.learning import mean_power_by_sbs, merge_profile, train_all
from spectrum_sim.features.matching import (
    GameSpec,
    SimulatedDesirability,
    evaluate_state,
    random_matching,
    solve,
)
from spectrum_sim.features.rates import power_levels, power_pmf
from spectrum_sim.utils import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WelfareTrace:
    """
    Outcome of one sample.

    ``per_iteration_S`` holds the step points of the welfare curve: S takes
    the value ``per_iteration_S[i]`` from iteration ``trace_iterations[i]``
    until the next step point. The last entry equals ``final_S``.
    """
    sample_id: int
    seed: int
    trace_iterations: Tuple[int, ...]
    per_iteration_S: Tuple[float, ...]
    final_S: float
    swaps: int
    proposals: int
    iterations: int
    rounds: int
    mean_power_w: float
    collisions: int
    potential_drops: int = 0


@dataclass
class ExperimentResult:
    cfg: SimConfig
    samples: List[WelfareTrace] = field(default_factory=list)

    @property
    def welfare(self) -> np.ndarray:
        return np.array([s.final_S for s in self.samples], dtype=float)

    @property
    def cdf(self) -> pd.DataFrame:
        return welfare_cdf(self.welfare)

    @property
    def per_op_welfare(self) -> float:
        return per_op_welfare(self.welfare, self.cfg.num_ops)

    def samples_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(s.sample_id, s.seed, s.final_S, s.swaps, s.iterations) for s in self.samples],
            columns=['sample_id', 'seed', 'final_S', 'swaps', 'iterations'],
        )

    def trace_frame(self) -> pd.DataFrame:
        rows = [(s.sample_id, it, value)
                for s in self.samples
                for it, value in zip(s.trace_iterations, s.per_iteration_S)]
        return pd.DataFrame(rows, columns=['sample_id', 'iteration', 'S'])

    def power_frame(self) -> pd.DataFrame:
        return pd.DataFrame([(s.sample_id, s.mean_power_w) for s in self.samples],
                            columns=['sample_id', 'mean_power_w'])

    def summary(self) -> Dict[str, Any]:
        """JSON-friendly summary with the config echo (no timestamps)."""
        return {
            'config': self.cfg.to_dict(),
            'samples': len(self.samples),
            'welfare': compute_distribution(self.welfare),
            'per_op_welfare': self.per_op_welfare,
            'mean_power_w': float(np.mean([s.mean_power_w for s in self.samples])) if self.samples else 0.0,
            'mean_swaps': float(np.mean([s.swaps for s in self.samples])) if self.samples else 0.0,
            'mean_collisions': float(np.mean([s.collisions for s in self.samples])) if self.samples else 0.0,
        }


# ── Single sample ────────────────────────────────────────────────────────────

class _StepTrace:
    """Accumulates step points of the welfare curve over solver passes."""

    def __init__(self, value: float):
        self.iterations = [0]
        self.values = [value]
        self.offset = 0

    def extend(self, values: Sequence[float]) -> None:
        for i, value in enumerate(values[1:], start=1):
            if value != self.values[-1]:
                self.iterations.append(self.offset + i)
                self.values.append(value)
        self.offset += len(values) - 1

    def step(self, value: float) -> None:
        self.offset += 1
        if value != self.values[-1]:
            self.iterations.append(self.offset)
            self.values.append(value)

    def close(self, value: float) -> None:
        if self.values[-1] != value or self.iterations[-1] != self.offset:
            self.iterations.append(self.offset)
            self.values.append(value)


def run_sample(cfg: SimConfig, sample_seed: int, sample_id: int = 0) -> WelfareTrace:
    """
    Simulate one building and solve its spectrum sharing game.

    Samples a deployment and a random matching, then alternates a solver pass
    with per-operator power learning until the welfare changes by less than
    ``convergence_tol`` (relative) between rounds or ``max_rounds`` is hit.
    Fixed power modes need a single solver pass.
    """
    cfg.validate()
    rng = np.random.default_rng(sample_seed)
    dep = sample_deployment(cfg, rng)
    spec = GameSpec.from_config(cfg)
    levels = power_levels(cfg)
    profile = power_pmf(cfg, cfg.power_mode, dep.num_sbs)
    model = SimulatedDesirability(dep, cfg, profile, seed=sample_seed)

    state = evaluate_state(random_matching(spec, rng), model)
    trace = _StepTrace(state.welfare)
    swaps = proposals = drops = rounds = 0
    qtables: Dict[int, np.ndarray] = {}
    previous: Optional[float] = None

    while rounds < cfg.max_rounds:
        rounds += 1
        run = solve(state, model, cfg, rng)
        trace.extend(run.welfare_trace)
        swaps += run.swaps
        proposals += run.proposals
        drops += run.potential_drops
        state = run.state

        if cfg.power_mode != 'qlearning' or cfg.episodes == 0:
            break

        results = train_all(dep, state.matching, cfg, rng, profile, qtables)
        profile = merge_profile(profile, results)
        for result in results.values():
            qtables.update(result.qtables)
        model = model.with_power_pmf(profile)
        state = evaluate_state(state.matching, model)
        trace.step(state.welfare)

        if previous is not None and abs(state.welfare - previous) <= cfg.convergence_tol * max(abs(previous), 1e-12):
            logger.debug(f"sample {sample_id} converged after {rounds} rounds")
            break
        previous = state.welfare

    trace.close(state.welfare)
    return WelfareTrace(
        sample_id=sample_id,
        seed=sample_seed,
        trace_iterations=tuple(trace.iterations),
        per_iteration_S=tuple(trace.values),
        final_S=state.welfare,
        swaps=swaps,
        proposals=proposals,
        iterations=trace.offset,
        rounds=rounds,
        mean_power_w=float(mean_power_by_sbs(levels, profile).mean()),
        collisions=state.collisions,
        potential_drops=drops,
    )


# ── Experiments ──────────────────────────────────────────────────────────────

def _run_indexed(job: Tuple[SimConfig, int, int]) -> WelfareTrace:
    cfg, sample_id, seed = job
    try:
        return run_sample(cfg, seed, sample_id)
    except Exception as e:
        raise SimulationError(f"sample {sample_id} (seed {seed}) failed: {e}") from e


def sample_seeds(cfg: SimConfig) -> List[int]:
    """Per-sample seeds; shared across arms so comparisons are paired."""
    return [derive_seed(cfg.seed, i) for i in range(cfg.samples)]


def run_experiment(cfg: SimConfig, workers: Optional[int] = None) -> ExperimentResult:
    """
    Run ``cfg.samples`` independent samples, in order of sample index.

    Args:
        cfg: Experiment configuration
        workers: Process count (the SPECTRUM_SIM_WORKERS environment variable wins)
    """
    cfg.validate()
    workers = Config.resolve_workers(workers if workers is not None else cfg.workers)
    jobs = [(cfg, i, seed) for i, seed in enumerate(sample_seeds(cfg))]
    logger.info(f"Running {len(jobs)} samples ({cfg.solver}, {cfg.power_mode}) on {workers} worker(s)")

    if workers == 1 or len(jobs) <= 1:
        samples = [_run_indexed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_run_indexed, jobs, chunksize=max(1, len(jobs) // (4 * workers))))

    result = ExperimentResult(cfg=cfg, samples=samples)
    if samples:
        logger.info(f"Mean welfare {result.welfare.mean():.4f} bits/s/Hz over {len(samples)} samples")
    return result


def sweep_configs(cfg: SimConfig, over: str, values: Iterable[Any], average_quotas: bool = False) -> List[Tuple[Any, SimConfig]]:
    """
    Configurations of a one-parameter sweep.

    Args:
        over: 'K' (operator count, quotas from the per-K tables), 'L' (RB
            count) or 'c' (explicit quota vectors)
        values: Grid values
        average_quotas: Use the per-K table of the per-operator average study
    """
    table = Config.AVERAGE_QUOTAS_BY_NUM_OPS if average_quotas else Config.QUOTAS_BY_NUM_OPS
    grid = []
    for value in values:
        if over == 'K':
            if value not in table:
                raise UsageError(f"no quota vector for K={value}; known: {sorted(table)}")
            grid.append((value, cfg.with_overrides(rb_quota=tuple(table[value]))))
        elif over == 'L':
            grid.append((value, cfg.with_overrides(num_rbs=int(value))))
        elif over == 'c':
            grid.append((tuple(value), cfg.with_overrides(rb_quota=tuple(int(c) for c in value))))
        else:
            raise UsageError(f"cannot sweep over {over!r}; use K, L or c")
    return grid


def run_sweep(
    cfg: SimConfig,
    over: str,
    values: Iterable[Any],
    average_quotas: bool = False,
    workers: Optional[int] = None,
) -> Tuple[pd.DataFrame, Dict[Any, ExperimentResult]]:
    """Run one experiment per grid point; returns the per-point table and the results."""
    rows = []
    results: Dict[Any, ExperimentResult] = {}
    for value, point_cfg in sweep_configs(cfg, over, values, average_quotas):
        result = run_experiment(point_cfg, workers)
        results[value] = result
        welfare = result.welfare
        rows.append({
            'over': over,
            'value': ','.join(map(str, value)) if isinstance(value, tuple) else value,
            'num_ops': point_cfg.num_ops,
            'num_rbs': point_cfg.num_rbs,
            'mean_S': float(welfare.mean()) if welfare.size else 0.0,
            'median_S': float(np.median(welfare)) if welfare.size else 0.0,
            'per_op_S': result.per_op_welfare,
        })
    return pd.DataFrame(rows, columns=['over', 'value', 'num_ops', 'num_rbs', 'mean_S', 'median_S', 'per_op_S']), results
