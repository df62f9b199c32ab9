"""Disaggregation error metrics and the real-vs-denoised gap.

Sums go through ``np.sum``, which uses pairwise summation for float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTruth, GridMismatch
from .timeseries import PowerSeries


@dataclass(frozen=True)
class Score:
    mae: float
    nde: float
    slots: int


@dataclass(frozen=True)
class Gap:
    delta_mae: float
    delta_nde: float


def _paired(estimate: PowerSeries, truth: PowerSeries) -> tuple[np.ndarray, np.ndarray]:
    if not estimate.same_grid(truth):
        raise GridMismatch("estimate and truth must share one grid")
    both = estimate.present & truth.present
    if not both.any():
        raise GridMismatch("estimate and truth have no slot in common")
    return estimate.values[both], truth.values[both]


def mae(estimate: PowerSeries, truth: PowerSeries) -> float:
    est, tru = _paired(estimate, truth)
    return float(np.sum(np.abs(est - tru)) / len(tru))


def nde(estimate: PowerSeries, truth: PowerSeries) -> float:
    est, tru = _paired(estimate, truth)
    denom = float(np.sum(tru * tru))
    if denom <= 0.0:
        raise DegenerateTruth("ground truth is zero on every slot")
    return float(np.sqrt(np.sum((est - tru) ** 2) / denom))


def score(estimate: PowerSeries, truth: PowerSeries) -> Score:
    est, _ = _paired(estimate, truth)
    return Score(mae(estimate, truth), nde(estimate, truth), len(est))


def gap(real: Score, denoised: Score) -> Gap:
    return Gap(real.mae - denoised.mae, real.nde - denoised.nde)


def false_positive_count(estimate: PowerSeries, truth: PowerSeries, on_threshold: float = 15.0) -> int:
    """Slots estimated ON while the appliance was OFF (diagnostic only)."""
    est, tru = _paired(estimate, truth)
    return int(np.count_nonzero((est > on_threshold) & (tru <= on_threshold)))
