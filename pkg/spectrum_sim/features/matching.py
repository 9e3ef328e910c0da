"""
Matching Game — many-to-one matching of operators to resource blocks (RBs)
with externalities.

An operator that needs c_k RBs is split into c_k identical children. Every
child sits in exactly one RB slot; slots no child uses hold vacancy players
with zero utility, so moving a child into a free slot is a swap with a vacancy.

A desirability model maps (parent, rb, matching) to the weighted sum rate the
parent's SBSs would get on that RB. Three models share that signature:
SimulatedDesirability (geometry aware Monte Carlo), AnalyticDesirability
(count-only stochastic-geometry rate) and TabulatedDesirability (explicit
tables for crafted instances).
"""
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from config import Config, SimConfig
from spectrum_sim.errors import OracleTooLargeError, UsageError
from spectrum_sim.features.channel import Deployment, intensity, mean_gains
from spectrum_sim.features.rates import (
    cached_expected_rate,
    mean_sqrt_power,
    power_levels,
    power_pmf,
    social_welfare,
)
from spectrum_sim.utils import keyed_rng

logger = logging.getLogger(__name__)


# ── Players and matchings ────────────────────────────────────────────────────

@dataclass(frozen=True)
class AugmentedOp:
    """One child copy of an operator; ids are 0-based."""
    child_id: int
    parent_id: int
    sibling_index: int


def augment(quota: Sequence[int]) -> List[AugmentedOp]:
    """
    Split every operator into c_k children, numbered parent by parent.

    Args:
        quota: c_k per operator

    Returns:
        sum(c_k) children
    """
    if any(c < 1 for c in quota):
        raise UsageError(f"every quota entry must be >= 1, got {list(quota)}")
    children: List[AugmentedOp] = []
    for parent, count in enumerate(quota):
        for sibling in range(count):
            children.append(AugmentedOp(len(children), parent, sibling))
    return children


@dataclass(frozen=True)
class GameSpec:
    """Static description of one matching game."""
    quota: Tuple[int, ...]
    rb_capacity: Tuple[int, ...]
    op_weight: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.op_weight) != len(self.quota):
            raise UsageError(f"{len(self.op_weight)} weights for {len(self.quota)} operators")
        if any(b < 1 for b in self.rb_capacity):
            raise UsageError(f"every RB capacity must be >= 1, got {list(self.rb_capacity)}")
        if sum(self.rb_capacity) < sum(self.quota):
            raise UsageError("total RB capacity is below the total quota")
        augment(self.quota)

    @classmethod
    def from_config(cls, cfg: SimConfig) -> 'GameSpec':
        return cls(tuple(cfg.rb_quota), tuple(cfg.rb_capacity), tuple(cfg.op_weight))

    @cached_property
    def children(self) -> Tuple[AugmentedOp, ...]:
        return tuple(augment(self.quota))

    @cached_property
    def child_parent(self) -> Tuple[int, ...]:
        return tuple(child.parent_id for child in self.children)

    @cached_property
    def slot_rb(self) -> Tuple[int, ...]:
        """RB of every slot, slots of RB 0 first."""
        return tuple(rb for rb, cap in enumerate(self.rb_capacity) for _ in range(cap))

    @property
    def num_children(self) -> int:
        return len(self.child_parent)

    @property
    def num_rbs(self) -> int:
        return len(self.rb_capacity)

    @property
    def num_ops(self) -> int:
        return len(self.quota)

    @property
    def num_slots(self) -> int:
        return len(self.slot_rb)

    def is_vacancy(self, player: int) -> bool:
        return player >= self.num_children

    def siblings(self, parent: int) -> Tuple[int, ...]:
        return tuple(k for k, p in enumerate(self.child_parent) if p == parent)


class Matching:
    """
    Slot arrangement of all players.

    ``slots[i]`` is the player in slot i; players 0..n-1 are children and the
    rest are vacancies. Two matchings are equal when every child sits on the
    same RB, whatever the arrangement inside an RB.
    """
    __slots__ = ('spec', 'slots', '_where', '_child_rb')

    def __init__(self, spec: GameSpec, slots: Sequence[int]):
        self.spec = spec
        self.slots = tuple(int(p) for p in slots)
        if sorted(self.slots) != list(range(spec.num_slots)):
            raise UsageError(f"slots must be a permutation of {spec.num_slots} players")
        where = [0] * len(self.slots)
        for slot, player in enumerate(self.slots):
            where[player] = slot
        self._where = tuple(where)
        self._child_rb = tuple(spec.slot_rb[where[k]] for k in range(spec.num_children))

    @classmethod
    def from_assignment(cls, spec: GameSpec, assignment: Sequence[int]) -> 'Matching':
        """
        Place child k on RB assignment[k]; vacancies fill the remaining slots.

        Raises:
            UsageError: wrong length, unknown RB or an RB over capacity
        """
        if len(assignment) != spec.num_children:
            raise UsageError(f"assignment lists {len(assignment)} children, expected {spec.num_children}")
        free: Dict[int, List[int]] = {}
        for slot, rb in enumerate(spec.slot_rb):
            free.setdefault(rb, []).append(slot)
        slots = [-1] * spec.num_slots
        for child, rb in enumerate(assignment):
            if rb not in free:
                raise UsageError(f"unknown RB {rb}")
            if not free[rb]:
                raise UsageError(f"RB {rb} exceeds its capacity {spec.rb_capacity[rb]}")
            slots[free[rb].pop(0)] = child
        vacancies = iter(range(spec.num_children, spec.num_slots))
        return cls(spec, [p if p >= 0 else next(vacancies) for p in slots])

    # ── Views ────────────────────────────────────────────────────────────────

    @property
    def assignment(self) -> Tuple[int, ...]:
        """RB of every child."""
        return self._child_rb

    @property
    def assign(self) -> Dict[int, int]:
        return dict(enumerate(self._child_rb))

    @property
    def occupancy(self) -> Dict[int, FrozenSet[int]]:
        """Children on every RB (empty RBs included)."""
        groups: Dict[int, set] = {rb: set() for rb in range(self.spec.num_rbs)}
        for child, rb in enumerate(self._child_rb):
            groups[rb].add(child)
        return {rb: frozenset(members) for rb, members in groups.items()}

    @property
    def vacancy_slots(self) -> Tuple[int, ...]:
        return tuple(slot for slot, p in enumerate(self.slots) if self.spec.is_vacancy(p))

    def rb_of(self, player: int) -> int:
        return self.spec.slot_rb[self._where[player]]

    def occupants(self, rb: int) -> List[int]:
        return [k for k, l in enumerate(self._child_rb) if l == rb]

    def co_parents(self, rb: int) -> Tuple[int, ...]:
        """Parents of the children on an RB, sorted, with multiplicity."""
        parent = self.spec.child_parent
        return tuple(sorted(parent[k] for k, l in enumerate(self._child_rb) if l == rb))

    def held_rbs(self, parent: int) -> FrozenSet[int]:
        """L_k: the distinct RBs held by an operator's children."""
        owner = self.spec.child_parent
        return frozenset(l for k, l in enumerate(self._child_rb) if owner[k] == parent)

    # ── Updates ──────────────────────────────────────────────────────────────

    def swapped(self, a: int, b: int) -> 'Matching':
        slots = list(self.slots)
        sa, sb = self._where[a], self._where[b]
        slots[sa], slots[sb] = slots[sb], slots[sa]
        return Matching(self.spec, slots)

    def validate(self) -> None:
        """Check C1 (RB capacity) and C2 (RBs per operator)."""
        load = Counter(self._child_rb)
        for rb, count in load.items():
            if count > self.spec.rb_capacity[rb]:
                raise UsageError(f"RB {rb} carries {count} children, capacity {self.spec.rb_capacity[rb]}")
        for parent, quota in enumerate(self.spec.quota):
            held = len(self.held_rbs(parent))
            if held > quota:
                raise UsageError(f"operator {parent} holds {held} RBs, quota {quota}")
        occupancy = self.occupancy
        if any(child not in occupancy[rb] for child, rb in enumerate(self._child_rb)):
            raise UsageError("occupancy and assignment disagree")

    def occupancy_sizes(self) -> Tuple[int, ...]:
        return tuple(len(members) for _, members in sorted(self.occupancy.items()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matching):
            return NotImplemented
        return self.spec == other.spec and self._child_rb == other._child_rb

    def __hash__(self) -> int:
        return hash(self._child_rb)

    def __repr__(self) -> str:
        return f"Matching({list(self._child_rb)})"


def random_matching(spec: GameSpec, rng: np.random.Generator) -> Matching:
    """Uniformly random arrangement of all players over the slots."""
    return Matching(spec, rng.permutation(spec.num_slots))


# ── Desirability models ──────────────────────────────────────────────────────

DesirabilityModel = Callable[[int, int, Matching], float]


class SimulatedDesirability:
    """
    Monte Carlo weighted sum rate of a parent's SBSs on one RB.

    Every SBS of every operator present on the RB (the parent included) is
    active with probability 1/|L_j|, draws its power from its PMF row and sees
    fresh Rayleigh fades on every link. With ``qos_gate`` a draw below the SINR
    threshold earns nothing.

    Estimates are memoized per (parent, rb, occupancy pattern), the pattern
    being the operators on the RB with their |L_j|. Each pattern gets its own
    keyed random stream, so values do not depend on evaluation order.
    """

    def __init__(self, dep: Deployment, cfg: SimConfig, pmf: Optional[np.ndarray] = None, seed: int = 0):
        self.dep = dep
        self.cfg = cfg
        self.seed = int(seed)
        self.pmf = (power_pmf(cfg, cfg.power_mode, dep.num_sbs) if pmf is None
                    else np.asarray(pmf, dtype=float))
        self._levels = power_levels(cfg)
        self._cdf = np.cumsum(self.pmf / self.pmf.sum(axis=1, keepdims=True), axis=1)
        self._gains = mean_gains(dep, cfg)
        self._members = {op: dep.members(op) for op in range(cfg.num_ops)}
        self._cache: Dict[tuple, float] = {}

    def with_power_pmf(self, pmf: np.ndarray) -> 'SimulatedDesirability':
        """Same deployment and seed with new power PMFs (empty cache)."""
        return SimulatedDesirability(self.dep, self.cfg, pmf, self.seed)

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def pattern(self, parent: int, rb: int, matching: Matching) -> Tuple[Tuple[int, int], ...]:
        present = set(matching.co_parents(rb))
        present.add(parent)
        return tuple((op, max(len(matching.held_rbs(op)), 1)) for op in sorted(present))

    def __call__(self, parent: int, rb: int, matching: Matching) -> float:
        pattern = self.pattern(parent, rb, matching)
        key = (parent, rb, pattern)
        value = self._cache.get(key)
        if value is None:
            value = self._estimate(parent, rb, pattern)
            self._cache[key] = value
        return value

    def _estimate(self, parent: int, rb: int, pattern: Tuple[Tuple[int, int], ...]) -> float:
        cfg = self.cfg
        if cfg.sbs_weight == 0:
            return 0.0
        sbs = np.concatenate([self._members[op] for op, _ in pattern])
        activity = np.concatenate([np.full(self._members[op].size, 1.0 / held) for op, held in pattern])
        target = np.flatnonzero(self.dep.sbs_op[sbs] == parent)
        rng = keyed_rng(self.seed, parent, rb, *itertools.chain.from_iterable(pattern))

        draws, m = cfg.fade_draws, sbs.size
        active = rng.random((draws, m)) < activity
        level = (rng.random((draws, m))[:, :, None] > self._cdf[sbs][None, :, :]).sum(axis=2)
        power = self._levels[np.minimum(level, self._levels.size - 1)]
        gains = self._gains[np.ix_(sbs, sbs)][None, :, :] * rng.exponential(1.0, size=(draws, m, m))

        tx = np.where(active, power, 0.0)
        received = np.einsum('dj,djf->df', tx, gains)
        direct = gains[:, np.arange(m), np.arange(m)]
        interference = np.maximum(received - tx * direct, 0.0)

        sinr = power[:, target] * direct[:, target] / (interference[:, target] + cfg.noise_power)
        rate = np.log2(1.0 + sinr)
        if cfg.qos_gate:
            rate = np.where(sinr >= cfg.sinr_th, rate, 0.0)
        value = float(cfg.sbs_weight * rate.mean(axis=0).sum())
        logger.debug(f"D(op={parent}, rb={rb}, pattern={pattern}) = {value:.4f}")
        return value


class AnalyticDesirability:
    """
    Count-only desirability from the closed-form PPP expected rate.

    The interferer intensity on an RB is proportional to the number of
    children on it, so swaps, which keep every RB's head count, leave the
    desirability of every bystander unchanged.
    """

    def __init__(self, dep: Deployment, cfg: SimConfig, pmf: Optional[np.ndarray] = None):
        self.cfg = cfg
        pmf = power_pmf(cfg, cfg.power_mode, dep.num_sbs) if pmf is None else np.asarray(pmf, dtype=float)
        levels = power_levels(cfg)
        self._power = pmf @ levels / pmf.sum(axis=1)
        self._mean_sqrt = mean_sqrt_power(levels, pmf)
        self._r = np.maximum(dep.serving_distances(), cfg.min_dist)
        self._members = {op: dep.members(op) for op in range(cfg.num_ops)}
        self._density = intensity(dep, cfg, num_ops=1)

    def __call__(self, parent: int, rb: int, matching: Matching) -> float:
        lam = max(len(matching.occupants(rb)), 1) * self._density
        return float(sum(
            self.cfg.sbs_weight * cached_expected_rate(lam, float(self._power[f]), self._mean_sqrt, float(self._r[f]))
            for f in self._members[parent]
        ))


class TabulatedDesirability:
    """D from a function of (parent, rb, co-occupant parents)."""

    def __init__(self, table: Callable[[int, int, Tuple[int, ...]], float]):
        self.table = table

    @classmethod
    def from_array(cls, values) -> 'TabulatedDesirability':
        """D[parent, rb], independent of who else shares the RB."""
        values = np.asarray(values, dtype=float)
        return cls(lambda parent, rb, _: float(values[parent, rb]))

    def __call__(self, parent: int, rb: int, matching: Matching) -> float:
        return float(self.table(parent, rb, matching.co_parents(rb)))


# ── Game state ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GameState:
    """A matching with its desirabilities, utilities, potential and welfare."""
    matching: Matching
    desirability: np.ndarray   # D of every child on its own RB
    indicator: np.ndarray      # 0 where a sibling shares the RB
    utilities: np.ndarray
    potential: float
    welfare: float

    @property
    def collisions(self) -> int:
        return int(np.count_nonzero(self.indicator == 0))


def sibling_indicator(matching: Matching) -> np.ndarray:
    parent = matching.spec.child_parent
    pairs = list(zip(parent, matching.assignment))
    counts = Counter(pairs)
    return np.array([1.0 if counts[pair] == 1 else 0.0 for pair in pairs])


def _finish(matching: Matching, desirability: np.ndarray) -> GameState:
    spec = matching.spec
    indicator = sibling_indicator(matching)
    utilities = desirability * indicator
    welfare = social_welfare(matching.assign, spec.child_parent, utilities, spec.op_weight)
    return GameState(matching, desirability, indicator, utilities, float(utilities.sum()), welfare)


def evaluate_state(matching: Matching, model: DesirabilityModel) -> GameState:
    """Evaluate every child's desirability from scratch."""
    parent = matching.spec.child_parent
    desirability = np.array([model(parent[k], rb, matching) for k, rb in enumerate(matching.assignment)])
    return _finish(matching, desirability)


def utility(player: int, state: GameState) -> float:
    """U = D * indicator; vacancies have utility 0."""
    if state.matching.spec.is_vacancy(player):
        return 0.0
    return float(state.utilities[player])


def apply_swap(state: GameState, a: int, b: int, model: DesirabilityModel) -> GameState:
    """
    Exchange the positions of two players.

    Only children whose RB is touched are re-evaluated: the two RBs involved,
    plus every RB of an operator whose set of held RBs changed (its SBSs now
    spread over a different number of RBs).
    """
    matching = state.matching
    rb_a, rb_b = matching.rb_of(a), matching.rb_of(b)
    if a == b or rb_a == rb_b:
        return state

    spec = matching.spec
    after = matching.swapped(a, b)
    affected = {rb_a, rb_b}
    for player in (a, b):
        if spec.is_vacancy(player):
            continue
        parent = spec.child_parent[player]
        held_before, held_after = matching.held_rbs(parent), after.held_rbs(parent)
        if held_before != held_after:
            affected |= held_before | held_after

    desirability = state.desirability.copy()
    for k, rb in enumerate(after.assignment):
        if rb in affected:
            desirability[k] = model(spec.child_parent[k], rb, after)
    return _finish(after, desirability)


def exchange_approved(before: Tuple[float, float], after: Tuple[float, float]) -> bool:
    """Both players weakly gain and at least one strictly gains."""
    return (after[0] >= before[0] and after[1] >= before[1]
            and (after[0] > before[0] or after[1] > before[1]))


def _approved(before: GameState, after: GameState, a: int, b: int) -> bool:
    return exchange_approved((utility(a, before), utility(b, before)),
                             (utility(a, after), utility(b, after)))


def is_approved_swap(state: GameState, a: int, b: int, model: DesirabilityModel) -> bool:
    return _approved(state, apply_swap(state, a, b, model), a, b)


def candidate_pairs(spec: GameSpec) -> List[Tuple[int, int]]:
    """Every player pair except vacancy-vacancy pairs."""
    return [(a, b) for a, b in itertools.combinations(range(spec.num_slots), 2)
            if not (spec.is_vacancy(a) and spec.is_vacancy(b))]


def find_approved_swap(state: GameState, model: DesirabilityModel) -> Optional[Tuple[int, int]]:
    for a, b in candidate_pairs(state.matching.spec):
        if is_approved_swap(state, a, b, model):
            return a, b
    return None


def is_pairwise_stable(state: GameState, model: DesirabilityModel) -> bool:
    """True iff no approved swap exists among all player pairs."""
    return find_approved_swap(state, model) is None


# ── Solvers ──────────────────────────────────────────────────────────────────

@dataclass
class SolverRun:
    """
    Outcome of one solver pass.

    ``welfare_trace[i]`` is S after iteration i (index 0 is the start). For
    MCMC it is the best welfare seen so far.
    """
    state: GameState
    potential_trace: List[float] = field(default_factory=list)
    welfare_trace: List[float] = field(default_factory=list)
    swaps: int = 0
    proposals: int = 0
    exhausted: bool = False
    potential_drops: int = 0

    @property
    def iterations(self) -> int:
        return len(self.welfare_trace) - 1


def greedy_swap(
    state0: GameState,
    model: DesirabilityModel,
    rng: np.random.Generator,
    max_iterations: int = Config.GREEDY_MAX_ITERATIONS,
) -> SolverRun:
    """
    Apply approved swaps until a full pass over all pairs finds none.

    Each iteration scans the pairs in a fresh random order and applies the
    first approved swap. ``exhausted`` is True when the final pass found no
    approved swap, i.e. the result is pairwise stable.

    Under desirabilities with inter-operator externalities an approved swap
    can lower the potential; such swaps are counted in ``potential_drops``.
    """
    pairs = candidate_pairs(state0.matching.spec)
    state = state0
    run = SolverRun(state=state0, potential_trace=[state0.potential], welfare_trace=[state0.welfare])

    while run.swaps < max_iterations:
        found = None
        for idx in rng.permutation(len(pairs)):
            a, b = pairs[idx]
            if state.matching.rb_of(a) == state.matching.rb_of(b):
                continue
            run.proposals += 1
            after = apply_swap(state, a, b, model)
            if _approved(state, after, a, b):
                found = after
                break
        if found is None:
            run.exhausted = True
            break
        if not found.potential > state.potential:
            run.potential_drops += 1
            logger.debug(f"approved swap lowered the potential {state.potential:.6g} -> {found.potential:.6g}")
        state = found
        run.swaps += 1
        run.potential_trace.append(state.potential)
        run.welfare_trace.append(state.welfare)

    run.state = state
    logger.debug(f"greedy_swap: {run.swaps} swaps, {run.proposals} proposals, exhausted={run.exhausted}")
    return run


def acceptance_probability(delta_welfare: float, temp_tb: float) -> float:
    """Sigmoid acceptance 1 / (1 + exp(-T_b * dS))."""
    return float(expit(temp_tb * delta_welfare))


def mcmc(
    state0: GameState,
    model: DesirabilityModel,
    rng: np.random.Generator,
    max_iterations: int = Config.MCMC_MAX_ITERATIONS,
    temp_tb: float = Config.TEMP_TB,
) -> SolverRun:
    """
    Random pair proposals accepted with the sigmoid of the welfare change.

    Returns the best-welfare state among every state visited or proposed.
    """
    if not temp_tb > 0:
        raise UsageError(f"temp_tb must be > 0, got {temp_tb}")
    pairs = candidate_pairs(state0.matching.spec)
    state = best = state0
    run = SolverRun(state=state0, potential_trace=[state0.potential], welfare_trace=[state0.welfare])
    if not pairs:
        logger.debug("mcmc: single-slot game, nothing to propose")
        return run

    for _ in range(max_iterations):
        a, b = pairs[rng.integers(len(pairs))]
        proposal = apply_swap(state, a, b, model)
        run.proposals += 1
        if proposal.welfare > best.welfare:
            best = proposal
        if rng.random() < acceptance_probability(proposal.welfare - state.welfare, temp_tb):
            if proposal is not state:
                run.swaps += 1
            state = proposal
        run.potential_trace.append(state.potential)
        run.welfare_trace.append(best.welfare)

    run.state = best
    logger.debug(f"mcmc: best S={best.welfare:.6g} after {run.proposals} proposals ({run.swaps} accepted)")
    return run


def solve(
    state0: GameState,
    model: DesirabilityModel,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> SolverRun:
    """Run the solver the configuration selects."""
    if cfg.solver == 'greedy':
        return greedy_swap(state0, model, rng, cfg.max_iterations)
    return mcmc(state0, model, rng, cfg.max_iterations, cfg.temp_tb)


# ── Exhaustive oracle ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Enumeration:
    """Every feasible matching of a small game with its properties."""
    best_welfare: GameState
    best_potential: GameState
    ledger: pd.DataFrame
    states: Dict[Tuple[int, ...], GameState]


def _neighbors(spec: GameSpec, assignment: Tuple[int, ...]) -> Iterator[Tuple[int, Optional[int], Tuple[int, ...]]]:
    """Swap neighbors as (child, other child or None for a vacancy, new assignment)."""
    load = Counter(assignment)
    n = spec.num_children
    for a in range(n):
        for b in range(a + 1, n):
            if assignment[a] != assignment[b]:
                moved = list(assignment)
                moved[a], moved[b] = assignment[b], assignment[a]
                yield a, b, tuple(moved)
        for rb in range(spec.num_rbs):
            if rb != assignment[a] and load[rb] < spec.rb_capacity[rb]:
                moved = list(assignment)
                moved[a] = rb
                yield a, None, tuple(moved)


def enumerate_optimal(
    spec: GameSpec,
    model: DesirabilityModel,
    max_children: int = Config.ORACLE_MAX_CHILDREN,
    max_rbs: int = Config.ORACLE_MAX_RBS,
) -> Enumeration:
    """
    Evaluate every feasible complete matching.

    Assignments are visited in lexicographic order and ties keep the first,
    so the lowest assignment wins. The ledger flags local maxima of the
    potential and of the welfare (no swap neighbor strictly better) and
    pairwise stability (no approved swap).

    Raises:
        OracleTooLargeError: more than ``max_children`` children or ``max_rbs`` RBs
    """
    if spec.num_children > max_children or spec.num_rbs > max_rbs:
        raise OracleTooLargeError(
            f"refusing to enumerate {spec.num_children} children over {spec.num_rbs} RBs "
            f"(limits {max_children} children, {max_rbs} RBs)"
        )

    states: Dict[Tuple[int, ...], GameState] = {}
    for assignment in itertools.product(range(spec.num_rbs), repeat=spec.num_children):
        load = Counter(assignment)
        if any(load[rb] > cap for rb, cap in enumerate(spec.rb_capacity)):
            continue
        states[assignment] = evaluate_state(Matching.from_assignment(spec, assignment), model)

    rows = []
    best_welfare = best_potential = None
    for assignment, state in states.items():
        if best_welfare is None or state.welfare > best_welfare.welfare:
            best_welfare = state
        if best_potential is None or state.potential > best_potential.potential:
            best_potential = state

        local_phi = local_s = stable = True
        for a, b, moved in _neighbors(spec, assignment):
            other = states[moved]
            local_phi &= not other.potential > state.potential
            local_s &= not other.welfare > state.welfare
            u_b = (0.0, 0.0) if b is None else (utility(b, state), utility(b, other))
            if exchange_approved((utility(a, state), u_b[0]), (utility(a, other), u_b[1])):
                stable = False
        rows.append({
            'assignment': assignment,
            'potential': state.potential,
            'welfare': state.welfare,
            'collision_free': state.collisions == 0,
            'local_max_potential': local_phi,
            'local_max_welfare': local_s,
            'pairwise_stable': stable,
        })

    logger.debug(f"enumerated {len(states)} matchings of {spec.num_children} children over {spec.num_rbs} RBs")
    return Enumeration(best_welfare=best_welfare, best_potential=best_potential,
                       ledger=pd.DataFrame(rows), states=states)
