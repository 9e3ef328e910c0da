"""
Power Learning — per-SBS Q-learning of transmit power levels.

Each SBS keeps a 2 x N table: the state is whether its QoS was violated in
the previous slot, the action is the power level n in {1..N} (n * delta
watts). Actions are drawn from a Boltzmann distribution over the Q-values;
rewards are the achieved rate when the SINR meets the threshold, else zero.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import softmax

from config import SimConfig
from spectrum_sim.errors import UsageError
from spectrum_sim.features.channel import ChannelDraw, Deployment, draw_channel, sinr, sinr_vector
from spectrum_sim.features.rates import inst_rate, power_levels, power_pmf

logger = logging.getLogger(__name__)

NUM_STATES = 2
TRACE_COLUMNS = ['slot', 'sbs_id', 'rb', 'state', 'action', 'power_w', 'sinr', 'reward', 'next_state']


@dataclass(frozen=True)
class AgentStep:
    """One (s, a, u, s') transition; ``action`` is the 1-based power level."""
    state: int
    action: int
    reward: float
    next_state: int


@dataclass
class TrainingResult:
    """Per-SBS tables, the empirical power PMF (rows follow ``members``) and the trace."""
    members: np.ndarray
    qtables: Dict[int, np.ndarray]
    pmf: np.ndarray
    trace: pd.DataFrame

    def greedy_levels(self, s: int = 0) -> Dict[int, int]:
        """Greedy power level of every SBS in state s."""
        return {f: greedy_action(qt, s) for f, qt in self.qtables.items()}


def new_qtable(num_levels: int) -> np.ndarray:
    return np.zeros((NUM_STATES, num_levels))


# ── 1. Observation and reward ────────────────────────────────────────────────

def observe_state(f: int, l: int, powers, occupancy, ch: ChannelDraw, cfg: SimConfig) -> int:
    """1 if SBS f's SINR on RB l is below the threshold, else 0."""
    return int(sinr(f, l, powers, occupancy, ch, cfg) < cfg.sinr_th)


def reward(sinr_value: float, cfg: SimConfig) -> float:
    """Achieved rate when the QoS holds (SINR >= threshold), otherwise 0."""
    if sinr_value < 0:
        raise UsageError(f"SINR must be non-negative, got {sinr_value}")
    return inst_rate(sinr_value) if sinr_value >= cfg.sinr_th else 0.0


# ── 2. Policy ────────────────────────────────────────────────────────────────

def boltzmann_probabilities(q_row, temp: float) -> np.ndarray:
    """exp(Q/T) normalized over all actions."""
    if not temp > 0:
        raise UsageError(f"temperature must be > 0, got {temp}")
    return softmax(np.asarray(q_row, dtype=float) / temp)


def select_action(qt: np.ndarray, s: int, temp_tp: float, rng: np.random.Generator) -> int:
    """Sample a 1-based power level from the Boltzmann policy of state s."""
    probs = boltzmann_probabilities(qt[s], temp_tp)
    return int(rng.choice(probs.size, p=probs)) + 1


def greedy_action(qt: np.ndarray, s: int) -> int:
    return int(np.argmax(qt[s])) + 1


# ── 3. Update ────────────────────────────────────────────────────────────────

def learning_rate(lr: float, visits: int, decay: bool = True) -> float:
    """
    Step size for the visits-th update of a cell: 1 / (1/lr + visits - 1).

    Starts at lr and decays like 1/t; lr=1 gives the running sample mean.
    """
    if not decay or visits <= 1:
        return lr
    return 1.0 / (1.0 / lr + visits - 1)


def q_update(qt: np.ndarray, step: AgentStep, lr: float, gamma: float) -> np.ndarray:
    """Temporal-difference update of the single cell (s, a); returns a new table."""
    if not 0.0 <= lr <= 1.0:
        raise UsageError(f"learning rate must be in [0, 1], got {lr}")
    if not 0.0 <= gamma < 1.0:
        raise UsageError(f"gamma must be in [0, 1), got {gamma}")
    updated = qt.copy()
    a = step.action - 1
    target = step.reward + gamma * qt[step.next_state].max()
    updated[step.state, a] = (1.0 - lr) * qt[step.state, a] + lr * target
    return updated


# ── 4. Operator training ─────────────────────────────────────────────────────

def _draw_levels(pmf_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One 1-based level per row of a PMF matrix."""
    cdf = np.cumsum(pmf_rows / pmf_rows.sum(axis=1, keepdims=True), axis=1)
    idx = (rng.random(pmf_rows.shape[0])[:, None] > cdf).sum(axis=1)
    return np.minimum(idx, pmf_rows.shape[1] - 1) + 1


def train_operator(
    dep: Deployment,
    matching,
    parent: int,
    cfg: SimConfig,
    rng: np.random.Generator,
    power_profile: Optional[np.ndarray] = None,
    initial: Optional[Mapping[int, np.ndarray]] = None,
) -> TrainingResult:
    """
    Run ``cfg.episodes`` synchronous slots of Q-learning for one operator.

    Every slot, each SBS of the operator picks one of the operator's RBs at
    random and a power level from its Boltzmann policy. SBSs of the other
    operators present on those RBs pick among their own RBs the same way
    and draw their power from ``power_profile``. Fresh fades are drawn, all
    agents are rewarded jointly, and each agent's state for the next slot is
    its current QoS outcome.

    Args:
        dep: Deployment
        matching: Matching whose held RBs define L_k for every operator
        parent: Operator to train
        cfg: Configuration (episodes, lr, gamma, temp_tp, power levels)
        rng: Random stream
        power_profile: (F, N) PMF of every SBS; uniform when None
        initial: Warm-start tables per SBS id

    Returns:
        TrainingResult; the PMF counts the actions of the second half of the slots

    Raises:
        UsageError: the operator holds no RB
    """
    held = sorted(matching.held_rbs(parent))
    if not held:
        raise UsageError(f"operator {parent} holds no RB")

    levels = power_levels(cfg)
    n = cfg.num_power_levels
    members = dep.members(parent)
    profile = power_pmf(cfg, 'uniform', dep.num_sbs) if power_profile is None else np.asarray(power_profile, dtype=float)

    tables = {int(f): (np.array(initial[f], dtype=float) if initial and f in initial else new_qtable(n))
              for f in members}
    visits = {int(f): np.zeros((NUM_STATES, n), dtype=int) for f in members}
    states = {int(f): 0 for f in members}

    # other operators sharing any of our RBs
    externals = []
    for op in sorted(set(p for rb in held for p in matching.co_parents(rb)) - {parent}):
        op_rbs = sorted(matching.held_rbs(op))
        for f in dep.members(op):
            externals.append((int(f), op_rbs))
    ext_ids = np.array([f for f, _ in externals], dtype=int)

    counts = np.zeros((members.size, n))
    start = cfg.episodes // 2
    trace = {col: [] for col in TRACE_COLUMNS}

    for slot in range(cfg.episodes):
        own_rb = rng.choice(held, size=members.size)
        actions = np.array([select_action(tables[int(f)], states[int(f)], cfg.temp_tp, rng) for f in members])

        powers = np.zeros(dep.num_sbs)
        powers[members] = levels[actions - 1]
        occupancy: Dict[int, list] = {rb: [] for rb in held}
        for f, rb in zip(members, own_rb):
            occupancy[int(rb)].append(int(f))

        if ext_ids.size:
            ext_levels = _draw_levels(profile[ext_ids], rng)
            for (f, op_rbs), level in zip(externals, ext_levels):
                rb = op_rbs[rng.integers(len(op_rbs))]
                if rb in occupancy:
                    occupancy[rb].append(f)
                    powers[f] = levels[level - 1]

        ch = draw_channel(dep, cfg, rng)
        sinr_of: Dict[int, float] = {}
        for rb, active in occupancy.items():
            if active:
                for f, value in zip(active, sinr_vector(active, powers, ch.gains, cfg.noise_power)):
                    sinr_of[f] = float(value)

        for i, f in enumerate(members):
            f = int(f)
            value = sinr_of[f]
            step = AgentStep(states[f], int(actions[i]), reward(value, cfg), int(value < cfg.sinr_th))
            visits[f][step.state, step.action - 1] += 1
            lr = learning_rate(cfg.lr, visits[f][step.state, step.action - 1], cfg.lr_decay)
            tables[f] = q_update(tables[f], step, lr, cfg.gamma)
            states[f] = step.next_state
            if slot >= start:
                counts[i, step.action - 1] += 1

            trace['slot'].append(slot)
            trace['sbs_id'].append(f)
            trace['rb'].append(int(own_rb[i]))
            trace['state'].append(step.state)
            trace['action'].append(step.action)
            trace['power_w'].append(float(powers[f]))
            trace['sinr'].append(value)
            trace['reward'].append(step.reward)
            trace['next_state'].append(step.next_state)

    totals = counts.sum(axis=1, keepdims=True)
    pmf = np.where(totals > 0, counts / np.maximum(totals, 1), 1.0 / n)
    result = TrainingResult(members=members, qtables=tables, pmf=pmf, trace=pd.DataFrame(trace, columns=TRACE_COLUMNS))
    logger.debug(f"trained operator {parent} on RBs {held} for {cfg.episodes} slots; "
                 f"greedy levels {result.greedy_levels()}")
    return result


def train_all(
    dep: Deployment,
    matching,
    cfg: SimConfig,
    rng: np.random.Generator,
    power_profile: Optional[np.ndarray] = None,
    initial: Optional[Mapping[int, np.ndarray]] = None,
) -> Dict[int, TrainingResult]:
    """Train every operator in turn against the current power profile."""
    return {op: train_operator(dep, matching, op, cfg, rng, power_profile, initial)
            for op in range(cfg.num_ops)}


def merge_profile(base: np.ndarray, results: Mapping[int, TrainingResult]) -> np.ndarray:
    """Write each operator's learned PMF rows into a copy of the full (F, N) profile."""
    profile = np.array(base, dtype=float)
    for result in results.values():
        profile[result.members] = result.pmf
    return profile


def mean_power_by_sbs(levels: np.ndarray, pmf: np.ndarray, sbs: Optional[Sequence[int]] = None) -> np.ndarray:
    """Expected transmit power (watts) of every SBS under its PMF row."""
    pmf = np.asarray(pmf, dtype=float)
    if sbs is not None:
        pmf = pmf[np.asarray(sbs, dtype=int)]
    return pmf @ levels / pmf.sum(axis=1)
