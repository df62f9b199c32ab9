"""Combinatorial Optimization (CO) disaggregation.

States are learned per appliance with a deterministic 1-D k-means over the ON
samples. Disaggregation is an exact search over the product of state tables:
every combination's total is precomputed once, and each aggregate reading is
matched to the nearest total by binary search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import SearchSpaceTooLarge
from .timeseries import HouseholdDataset, PowerSeries

log = logging.getLogger(__name__)

MAX_COMBINATIONS = 10**6


@dataclass(frozen=True)
class StateTable:
    levels: dict[str, tuple[float, ...]]

    def __post_init__(self):
        for name, lv in self.levels.items():
            if not lv or lv[0] != 0.0 or any(b <= a for a, b in zip(lv, lv[1:])):
                raise ValueError(f"{name}: levels must start at 0 and increase strictly")

    @property
    def names(self) -> list[str]:
        return list(self.levels)

    @property
    def n_combinations(self) -> int:
        return int(np.prod([len(v) for v in self.levels.values()], dtype=np.int64))


def kmeans_1d(x: np.ndarray, k: int, max_iter: int = 100, tol: float = 0.1) -> np.ndarray:
    """Sorted, de-duplicated centroids; initialised at evenly spaced quantiles."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    k = min(k, len(np.unique(x)))
    c = np.quantile(x, (np.arange(k) + 0.5) / k)
    for _ in range(max_iter):
        # x is sorted, so clusters are contiguous runs split at centroid midpoints
        cuts = np.searchsorted(x, (c[:-1] + c[1:]) / 2, side="right")
        parts = [p for p in np.split(x, cuts) if len(p)]
        new = np.array([p.mean() for p in parts])
        done = len(new) == len(c) and np.max(np.abs(new - c)) < tol
        c = new
        if done:
            break
    return np.unique(c)


def fit_states(
    train: HouseholdDataset,
    k_max: int = 4,
    on_threshold: float = 15.0,
    appliances: list[str] | None = None,
) -> StateTable:
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if len(train) == 0:
        raise ValueError("training data is empty")
    names = appliances if appliances is not None else train.names
    levels = {}
    for name in names:
        s = train.appliances[name]
        on = s.values[s.present & (s.values > on_threshold)]
        if on.size == 0:
            log.warning("%s never exceeds %.1f W; modelled as always OFF", name, on_threshold)
            levels[name] = (0.0,)
            continue
        centroids = kmeans_1d(on, k_max - 1)
        levels[name] = (0.0, *(float(v) for v in centroids if v > 0))
    return StateTable(levels)


def _combination_table(states: StateTable) -> tuple[np.ndarray, np.ndarray]:
    """State-index vectors in lexicographic order and their power totals."""
    n = states.n_combinations
    if n > MAX_COMBINATIONS:
        raise SearchSpaceTooLarge(f"{n} state combinations exceed the bound of {MAX_COMBINATIONS}")
    sizes = [len(v) for v in states.levels.values()]
    idx = np.indices(sizes).reshape(len(sizes), -1).T
    totals = np.zeros(n)
    for j, lv in enumerate(states.levels.values()):
        totals = totals + np.asarray(lv)[idx[:, j]]
    return idx, totals


def best_combinations(y: np.ndarray, states: StateTable) -> tuple[np.ndarray, np.ndarray]:
    """Per reading: the lexicographically smallest minimum-cost index vector, and that cost."""
    combos, totals = _combination_table(states)
    # unique() keeps the first (lexicographically smallest) combination per total
    uniq, first = np.unique(totals, return_index=True)
    pos = np.searchsorted(uniq, y)
    lo = np.clip(pos - 1, 0, len(uniq) - 1)
    hi = np.clip(pos, 0, len(uniq) - 1)
    d_lo = np.abs(y - uniq[lo])
    d_hi = np.abs(y - uniq[hi])
    pick_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (first[hi] < first[lo]))
    best = np.where(pick_hi, first[hi], first[lo])
    return combos[best], np.minimum(d_lo, d_hi)


def co_disaggregate(aggregate: PowerSeries, states: StateTable) -> dict[str, PowerSeries]:
    y = aggregate.values
    uy, inverse = np.unique(y, return_inverse=True)
    chosen, _ = best_combinations(uy, states)
    chosen = chosen[inverse]
    out = {}
    for j, (name, lv) in enumerate(states.levels.items()):
        est = np.asarray(lv)[chosen[:, j]]
        out[name] = PowerSeries(aggregate.timestamps, est, aggregate.interval, aggregate.power_type, aggregate.present)
    return out

