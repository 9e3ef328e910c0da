"""
Channel Model — small-cell deployments, link gains and SINR.

Pure computation module. Every random draw comes from the Generator passed in,
so identical (config, seed) pairs reproduce identical deployments and fades.
"""
import logging
from dataclasses import dataclass
from typing import Collection, Mapping, Optional

import numpy as np

from config import SimConfig
from spectrum_sim.errors import UsageError

logger = logging.getLogger(__name__)


# ── Domain types ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Deployment:
    """
    One sampled building: SBS and UE positions, operator ownership and the
    static log-normal shadowing of every SBS -> UE link.

    SBS ``f`` serves UE ``f``; ``shadow_db[f', f]`` is the shadowing between
    SBS ``f'`` and UE ``f``.
    """
    sbs_pos: np.ndarray     # (F, 2) meters
    sbs_op: np.ndarray      # (F,) parent operator of each SBS
    ue_pos: np.ndarray      # (F, 2) meters
    shadow_db: np.ndarray   # (F, F) dB

    @property
    def num_sbs(self) -> int:
        return int(self.sbs_pos.shape[0])

    def members(self, op_id: int) -> np.ndarray:
        """SBS ids owned by an operator."""
        return np.flatnonzero(self.sbs_op == op_id)

    def distances(self) -> np.ndarray:
        """d[f', f]: distance from SBS f' to UE f (meters)."""
        diff = self.sbs_pos[:, None, :] - self.ue_pos[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def serving_distances(self) -> np.ndarray:
        """r_ff for every SBS."""
        return np.hypot(*(self.sbs_pos - self.ue_pos).T)


@dataclass(frozen=True)
class ChannelDraw:
    """Linear power gains h[f', f] of one fading slot (interferer SBS, victim UE)."""
    gains: np.ndarray


# ── 1. Deployment sampling ───────────────────────────────────────────────────

def sample_deployment(cfg: SimConfig, rng: np.random.Generator) -> Deployment:
    """
    Place F_k SBSs per operator uniformly in the square and one UE per SBS.

    Fixed counts make this the PPP conditioned on its number of points.
    Each UE is uniform in the disk of radius ue_max_dist around its SBS,
    then clipped to the square.

    Args:
        cfg: Validated configuration
        rng: Random stream for this sample

    Returns:
        Deployment with K * F_k SBSs and UEs
    """
    cfg.validate()
    side = cfg.area_side
    num_sbs = cfg.num_sbs

    sbs_pos = rng.uniform(0.0, side, size=(num_sbs, 2))
    sbs_op = np.repeat(np.arange(cfg.num_ops), cfg.sbs_per_op)

    radius = cfg.ue_max_dist * np.sqrt(rng.uniform(0.0, 1.0, size=num_sbs))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=num_sbs)
    offset = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    ue_pos = np.clip(sbs_pos + offset, 0.0, side)

    shadow_db = rng.normal(0.0, cfg.shadow_sigma, size=(num_sbs, num_sbs))

    logger.debug(f"Sampled deployment: {cfg.num_ops} OPs x {cfg.sbs_per_op} SBSs in {side} m square")
    return Deployment(sbs_pos=sbs_pos, sbs_op=sbs_op, ue_pos=ue_pos, shadow_db=shadow_db)


def intensity(dep: Deployment, cfg: SimConfig, num_ops: Optional[int] = None) -> float:
    """
    SBS intensity per square meter from realized counts.

    Args:
        num_ops: Count only this many operators' SBSs (co-channel operators);
            all operators when None
    """
    count = dep.num_sbs if num_ops is None else num_ops * cfg.sbs_per_op
    return count / cfg.area_side ** 2


# ── 2. Pathloss and gains ────────────────────────────────────────────────────

def pathloss_db(d, cfg: SimConfig, cross_wall=False):
    """
    PL(d) = pl_const + pl_slope * log10(d) (+ wall_loss across a wall).

    Distances below cfg.min_dist are clamped. Works on scalars and arrays.
    """
    d = np.maximum(np.asarray(d, dtype=float), cfg.min_dist)
    loss = cfg.pl_const + cfg.pl_slope * np.log10(d)
    if cfg.wall_model:
        loss = loss + np.where(cross_wall, cfg.wall_loss, 0.0)
    return float(loss) if loss.ndim == 0 else loss


def mean_gains(dep: Deployment, cfg: SimConfig) -> np.ndarray:
    """Large-scale linear gains (pathloss and shadowing, no fast fading)."""
    # Walls separate operators; links inside one operator stay in one room
    cross_wall = dep.sbs_op[:, None] != dep.sbs_op[None, :]
    loss_db = pathloss_db(dep.distances(), cfg, cross_wall=cross_wall) + dep.shadow_db
    return 10.0 ** (-loss_db / 10.0)


def draw_channel(dep: Deployment, cfg: SimConfig, rng: np.random.Generator) -> ChannelDraw:
    """Large-scale gains times a fresh unit-mean exponential (Rayleigh power) fade."""
    base = mean_gains(dep, cfg)
    fade = rng.exponential(1.0, size=base.shape)
    return ChannelDraw(gains=base * fade)


# ── 3. SINR ──────────────────────────────────────────────────────────────────

def sinr_vector(active, powers, gains: np.ndarray, noise_power: float) -> np.ndarray:
    """
    SINR of every active SBS on one RB.

    Args:
        active: SBS ids transmitting on the RB
        powers: Per-SBS transmit powers (watts), indexed by SBS id
        gains: h[f', f] matrix
        noise_power: sigma^2 (watts)

    Returns:
        Array aligned with ``active``
    """
    active = np.asarray(active, dtype=int)
    if active.size == 0:
        return np.zeros(0)
    p = np.asarray(powers, dtype=float)[active]
    g = gains[np.ix_(active, active)]
    signal = np.diag(g) * p
    cross = g.copy()
    np.fill_diagonal(cross, 0.0)
    interference = p @ cross
    return signal / (interference + noise_power)


def sinr(
    f: int,
    l: int,
    powers,
    occupancy: Mapping[int, Collection[int]],
    ch: ChannelDraw,
    cfg: SimConfig,
) -> float:
    """
    SINR of SBS f on RB l given which SBSs are active on each RB.

    Raises:
        UsageError: f is not active on l, or transmits with non-positive power
    """
    active = sorted(occupancy.get(l, ()))
    if f not in active:
        raise UsageError(f"SBS {f} is not active on RB {l}")
    if not powers[f] > 0:
        raise UsageError(f"SBS {f} has non-positive power {powers[f]}")
    values = sinr_vector(active, powers, ch.gains, cfg.noise_power)
    return float(values[active.index(f)])
