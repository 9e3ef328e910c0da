"""
Utility Helper Functions
Unit conversions and seed derivation shared by the simulator modules.
"""
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

_MASK64 = 0xFFFFFFFFFFFFFFFF


def db_to_linear(value_db: ArrayLike) -> ArrayLike:
    """Convert a dB ratio to a linear ratio."""
    if isinstance(value_db, np.ndarray):
        return 10.0 ** (value_db / 10.0)
    return 10.0 ** (float(value_db) / 10.0)


def dbm_to_watts(value_dbm: float) -> float:
    """Convert dBm to watts: 10 dBm -> 0.01 W."""
    return 10.0 ** ((float(value_dbm) - 30.0) / 10.0)


def splitmix64(state: int) -> int:
    """
    One step of the SplitMix64 mixer.

    Args:
        state: Any integer (reduced modulo 2**64)

    Returns:
        Mixed 64-bit unsigned integer
    """
    z = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-sample seed from the master seed and the sample index."""
    return splitmix64(splitmix64(master_seed & _MASK64) ^ (index & _MASK64))


def keyed_rng(*key: int) -> np.random.Generator:
    """
    Generator whose stream is a pure function of the integer key.

    Used where a random estimate must not depend on call order, e.g. the
    desirability of an RB under a particular occupancy pattern.
    """
    entropy = [int(part) & _MASK64 for part in key]
    return np.random.default_rng(np.random.SeedSequence(entropy))
