"""
Analytics Engine — statistics over per-sample welfare tables.

Pure computation module. No I/O.
Functions accept pandas objects with a 'final_S' column (one row per sample)
and return computed results.
"""
from typing import Dict, Mapping

import numpy as np
import pandas as pd

WELFARE_COL = 'final_S'


# ── 1. Empirical CDF ─────────────────────────────────────────────────────────

def welfare_cdf(values) -> pd.DataFrame:
    """
    Empirical CDF of welfare samples.

    Returns:
        DataFrame with 'welfare' sorted ascending and 'probability' = i/n.
        Empty input gives an empty frame with both columns.
    """
    welfare = np.sort(np.asarray(values, dtype=float))
    n = welfare.size
    return pd.DataFrame({
        'welfare': welfare,
        'probability': np.arange(1, n + 1) / n if n else np.zeros(0),
    })


# ── 2. Distribution Statistics ───────────────────────────────────────────────

def compute_distribution(values) -> Dict[str, float]:
    """mean, std, min, q25, median, q75, max and count of welfare samples."""
    series = pd.Series(np.asarray(values, dtype=float)).dropna()
    if series.empty:
        return {'count': 0}
    return {
        'mean': float(series.mean()),
        'std': float(series.std()) if len(series) > 1 else 0.0,
        'min': float(series.min()),
        'q25': float(series.quantile(0.25)),
        'median': float(series.median()),
        'q75': float(series.quantile(0.75)),
        'max': float(series.max()),
        'count': int(len(series)),
    }


def compute_distributions(frames: Mapping[str, pd.DataFrame]) -> Dict[str, Dict[str, float]]:
    """Distribution stats per arm (e.g. per power mode)."""
    return {arm: compute_distribution(df[WELFARE_COL]) for arm, df in frames.items()}


def per_op_welfare(values, num_ops: int) -> float:
    """Mean welfare divided by the number of operators."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(values.mean() / num_ops)


# ── 3. Paired Comparisons ────────────────────────────────────────────────────

def paired_win_rate(a: pd.DataFrame, b: pd.DataFrame, ties_count: bool = True) -> float:
    """
    Fraction of matched seeds where arm ``a`` reaches at least (or, with
    ties_count=False, strictly more than) arm ``b``'s welfare.

    Rows are matched on 'seed'.
    """
    merged = a[['seed', WELFARE_COL]].merge(b[['seed', WELFARE_COL]], on='seed', suffixes=('_a', '_b'))
    if merged.empty:
        return 0.0
    lhs, rhs = merged[f'{WELFARE_COL}_a'], merged[f'{WELFARE_COL}_b']
    wins = (lhs >= rhs) if ties_count else (lhs > rhs)
    return float(wins.mean())


def stochastically_dominates(a, b, tolerance: float = 0.0) -> bool:
    """
    First-order dominance of sample ``a`` over ``b``: F_a(x) <= F_b(x) + tolerance
    at every observed x.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        return False
    grid = np.union1d(a, b)
    cdf_a = np.searchsorted(a, grid, side='right') / a.size
    cdf_b = np.searchsorted(b, grid, side='right') / b.size
    return bool(np.all(cdf_a <= cdf_b + tolerance))
