"""
Rate Engine — instantaneous, expected, per-operator and social-welfare rates.

All rates are in bits/s/Hz (log base 2). The stochastic-geometry expected rate
is integrated in nats and converted once at the end.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from config import Config, SimConfig
from spectrum_sim.errors import DomainError, UsageError

logger = logging.getLogger(__name__)

# Integrand cut-off for the expected-rate quadrature
_INTEGRAND_FLOOR = 1e-12


@dataclass(frozen=True)
class RateReport:
    """Per-child, per-parent and system rates of one matching."""
    per_child_op_rate: np.ndarray
    per_parent_op_rate: np.ndarray
    social_welfare: float
    per_sbs_rate: Optional[np.ndarray] = None


# ── 1. Instantaneous and averaged rates ──────────────────────────────────────

def inst_rate(sinr_value):
    """
    log2(1 + SINR). Accepts scalars or arrays.

    Raises:
        UsageError: any SINR is negative
    """
    values = np.asarray(sinr_value, dtype=float)
    if np.any(values < 0):
        raise UsageError(f"SINR must be non-negative, got {sinr_value}")
    rate = np.log2(1.0 + values)
    return float(rate) if rate.ndim == 0 else rate


def power_levels(cfg: SimConfig) -> np.ndarray:
    """{delta, 2 delta, ..., N delta} in watts."""
    return cfg.power_quantum * np.arange(1, cfg.num_power_levels + 1)


def mean_sqrt_power(levels: np.ndarray, pmf: np.ndarray) -> float:
    """E[sqrt(p')] under a power-level PMF (one PMF, or rows averaged)."""
    pmf = np.asarray(pmf, dtype=float)
    if pmf.ndim == 2:
        pmf = pmf.mean(axis=0)
    return float(np.sqrt(levels) @ (pmf / pmf.sum()))


def sbs_avg_rate(f: int, assigned_rbs: Iterable[int], evaluate: Callable[[int, int], float]) -> float:
    """
    Average expected rate of SBS f over its operator's RBs, each chosen with
    probability 1/|L_k|.

    Args:
        f: SBS id
        assigned_rbs: L_k
        evaluate: evaluate(f, l) -> expected rate of f on RB l

    Returns:
        Mean rate; 0.0 when the operator holds no RB
    """
    rbs = list(assigned_rbs)
    if not rbs:
        logger.debug(f"SBS {f} belongs to an operator without RBs")
        return 0.0
    return float(np.mean([evaluate(f, l) for l in rbs]))


def op_rate(members: Sequence[int], rates, weights=None) -> float:
    """Weighted sum rate sum_f rho_f R_f over an operator's SBSs."""
    members = np.asarray(members, dtype=int)
    if members.size == 0:
        return 0.0
    rates = np.asarray(rates, dtype=float)
    rho = np.ones_like(rates) if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), rates.shape)
    return float(rho[members] @ rates[members])


def parent_op_rate(children_rates: Sequence[float], num_rbs: int) -> float:
    """Parent rate: children rates summed over the distinct RBs the parent holds."""
    if num_rbs <= 0:
        return 0.0
    return float(np.sum(children_rates)) / num_rbs


# ── 2. Social welfare ────────────────────────────────────────────────────────

def rate_report(
    assignment: Mapping[int, int],
    child_parent: Sequence[int],
    child_rates: Sequence[float],
    op_weights: Sequence[float],
    rb_capacity: Optional[Sequence[int]] = None,
) -> RateReport:
    """
    Build per-parent rates and the social welfare of a matching.

    Args:
        assignment: child id -> RB id for every matched child
        child_parent: parent operator of each child
        child_rates: rate credited to each child (its Eq. 11 utility)
        op_weights: w_k per parent operator
        rb_capacity: b_l per RB; when given, C1 is checked

    Returns:
        RateReport with S = sum_l sum_k x_lk w_k R_OPk

    Raises:
        UsageError: the matching violates an RB capacity
    """
    num_ops = len(op_weights)
    child_rates = np.asarray(child_rates, dtype=float)

    if rb_capacity is not None:
        load: Dict[int, int] = {}
        for rb in assignment.values():
            load[rb] = load.get(rb, 0) + 1
        for rb, count in load.items():
            if rb < 0 or rb >= len(rb_capacity) or count > rb_capacity[rb]:
                raise UsageError(f"infeasible matching: RB {rb} carries {count} operators")

    held = [set() for _ in range(num_ops)]
    totals = np.zeros(num_ops)
    for child, rb in assignment.items():
        parent = child_parent[child]
        held[parent].add(rb)
        totals[parent] += child_rates[child]

    per_parent = np.array([parent_op_rate([totals[k]], len(held[k])) for k in range(num_ops)])
    # x_lk = 1 once per distinct RB held by parent k
    welfare = float(sum(len(held[k]) * op_weights[k] * per_parent[k] for k in range(num_ops)))
    return RateReport(per_child_op_rate=child_rates, per_parent_op_rate=per_parent,
                      social_welfare=welfare)


def social_welfare(
    assignment: Mapping[int, int],
    child_parent: Sequence[int],
    child_rates: Sequence[float],
    op_weights: Sequence[float],
    rb_capacity: Optional[Sequence[int]] = None,
) -> float:
    """Weighted sum of parent rates over matched (RB, operator) pairs."""
    return rate_report(assignment, child_parent, child_rates, op_weights, rb_capacity).social_welfare


# ── 3. Stochastic-geometry expected rate ─────────────────────────────────────

def expected_rate_ppp(lam: float, p_f: float, mean_sqrt_p: float, r_ff: float) -> float:
    """
    Interference-limited expected rate of a typical link in a PPP field.

    Integrates exp(-c sqrt(e^t - 1)) over t >= 0 with
    c = lam * pi^2 * r_ff^2 * E[sqrt(p')] / (2 sqrt(p_f)), after substituting
    u = sqrt(e^t - 1). Valid for pathloss exponent 4 and Rayleigh fading.

    Args:
        lam: SBS intensity per square meter
        p_f: Transmit power of the typical SBS (watts)
        mean_sqrt_p: E[sqrt(p')] of interferers (sqrt watts)
        r_ff: Serving link distance (meters)

    Returns:
        Expected rate in bits/s/Hz

    Raises:
        DomainError: lam <= 0 (the integral diverges) or p_f <= 0
    """
    if not lam > 0:
        raise DomainError(f"SBS intensity must be positive, got {lam}")
    if not p_f > 0:
        raise DomainError(f"transmit power must be positive, got {p_f}")
    c = lam * math.pi ** 2 * r_ff ** 2 * mean_sqrt_p / (2.0 * math.sqrt(p_f))
    if c <= 0:
        raise DomainError("expected-rate integral diverges for a zero exponent")

    # e^{-cu} bounds the integrand, so it is below the floor past u_max
    u_max = -math.log(_INTEGRAND_FLOOR) / c
    value, abs_err = integrate.quad(
        lambda u: math.exp(-c * u) * 2.0 * u / (1.0 + u * u),
        0.0, u_max,
        points=(min(1.0 / c, 0.5 * u_max),),
        limit=200, epsabs=1e-12, epsrel=1e-10,
    )
    logger.debug(f"expected_rate_ppp c={c:.4g} nats={value:.6g} (+/- {abs_err:.1e})")
    return value / math.log(2.0)


@lru_cache(maxsize=Config.CACHE_SIZE)
def cached_expected_rate(lam: float, p_f: float, mean_sqrt_p: float, r_ff: float) -> float:
    """Memoized expected_rate_ppp for repeated analytic desirability lookups."""
    return expected_rate_ppp(lam, p_f, mean_sqrt_p, r_ff)


# ── 4. Monte Carlo oracles ───────────────────────────────────────────────────

def _sir_rate_stats(
    rng: np.random.Generator,
    realizations: int,
    r_ff: float,
    p_f: float,
    levels: np.ndarray,
    pmf: np.ndarray,
    alpha: float,
    draw_distances: Callable[[np.random.Generator, int], Tuple[np.ndarray, np.ndarray]],
    chunk: int,
) -> Tuple[float, float]:
    """Mean and standard error of log2(1 + SIR) over PPP realizations."""
    pmf = np.asarray(pmf, dtype=float)
    pmf = pmf / pmf.sum()
    total = 0.0
    total_sq = 0.0
    count = 0
    done = 0
    while done < realizations:
        n = min(chunk, realizations - done)
        owner, dist = draw_distances(rng, n)
        p_int = rng.choice(levels, size=owner.size, p=pmf)
        fade = rng.exponential(1.0, size=owner.size)
        contrib = fade * p_int * np.maximum(dist, 1e-9) ** (-alpha)
        interference = np.bincount(owner, weights=contrib, minlength=n)
        signal = rng.exponential(1.0, size=n) * p_f * r_ff ** (-alpha)
        ok = interference > 0
        rates = np.log2(1.0 + signal[ok] / interference[ok])
        total += rates.sum()
        total_sq += (rates ** 2).sum()
        count += rates.size
        done += n
    if count == 0:
        raise DomainError("no realization had any interferer")
    mean = total / count
    var = max(total_sq / count - mean ** 2, 0.0)
    return mean, math.sqrt(var / count)


def simulate_ppp_rate(
    lam: float,
    r_ff: float,
    p_f: float,
    levels: np.ndarray,
    pmf: np.ndarray,
    rng: np.random.Generator,
    alpha: float = 4.0,
    realizations: int = 100_000,
    radius: Optional[float] = None,
    chunk: int = 4096,
) -> Tuple[float, float]:
    """
    Monte Carlo rate of a typical UE at the origin with PPP interferers in a disk.

    No noise; Rayleigh fades on every link; interferer powers drawn from
    ``pmf`` over ``levels``.

    Returns:
        (mean bits/s/Hz, standard error)
    """
    if not lam > 0:
        raise DomainError(f"SBS intensity must be positive, got {lam}")
    radius = radius if radius is not None else max(50.0, 15.0 * r_ff)
    mean_points = lam * math.pi * radius ** 2

    def draw(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        counts = rng.poisson(mean_points, size=n)
        owner = np.repeat(np.arange(n), counts)
        dist = radius * np.sqrt(rng.uniform(0.0, 1.0, size=owner.size))
        return owner, dist

    return _sir_rate_stats(rng, realizations, r_ff, p_f, np.asarray(levels, dtype=float),
                           pmf, alpha, draw, chunk)


def simulate_window_rate(
    lam: float,
    r_ff: float,
    p_f: float,
    levels: np.ndarray,
    pmf: np.ndarray,
    rng: np.random.Generator,
    location: Tuple[float, float],
    side: float,
    alpha: float = 4.0,
    realizations: int = 20_000,
    chunk: int = 2048,
) -> Tuple[float, float]:
    """Same oracle with the PPP restricted to a square window and the UE at ``location``."""
    if not lam > 0:
        raise DomainError(f"SBS intensity must be positive, got {lam}")
    x0, y0 = location
    mean_points = lam * side ** 2

    def draw(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        counts = rng.poisson(mean_points, size=n)
        owner = np.repeat(np.arange(n), counts)
        pts = rng.uniform(0.0, side, size=(owner.size, 2))
        dist = np.hypot(pts[:, 0] - x0, pts[:, 1] - y0)
        return owner, dist

    return _sir_rate_stats(rng, realizations, r_ff, p_f, np.asarray(levels, dtype=float),
                           pmf, alpha, draw, chunk)


# ── 5. Power-level PMFs ──────────────────────────────────────────────────────

def power_pmf(cfg: SimConfig, mode: str, num_sbs: Optional[int] = None) -> np.ndarray:
    """
    Per-SBS power-level PMF (rows: SBSs, columns: levels 1..N) for a fixed mode.

    'uniform' picks every level with equal probability, 'full' always transmits
    p_tot. 'qlearning' starts from the uniform PMF before any training.
    """
    rows = cfg.num_sbs if num_sbs is None else num_sbs
    n = cfg.num_power_levels
    if mode == 'full':
        pmf = np.zeros((rows, n))
        pmf[:, -1] = 1.0
        return pmf
    if mode in ('uniform', 'qlearning'):
        return np.full((rows, n), 1.0 / n)
    raise UsageError(f"unknown power mode {mode!r}")

