"""Synthetic households with known appliance ground truth and a set noise level.

The unmetered residual is drawn first (a constant base load plus random
rectangular pulses) and then multiplied by the single factor that puts the
household's noise-aggregate ratio exactly on ``NoiseSpec.target_nar``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfeasibleNoise
from .timeseries import HouseholdDataset, PowerSeries, PowerType


class Kind(enum.Enum):
    ONOFF = "onoff"
    MULTISTATE = "multistate"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class ApplianceModel:
    """Appliance state machine.

    ``levels[0]`` is the OFF state and must be 0 W. An activation of an ONOFF
    or CYCLIC model sits at ``levels[1]``; a MULTISTATE activation walks
    ``levels[1:]`` in order, in phases of equal length. ``jitter`` adds uniform
    ±jitter watts to ON samples.
    """

    name: str
    kind: Kind
    levels: tuple[float, ...]
    on_duration: int
    off_duration: int
    jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if len(self.levels) < 2 or self.levels[0] != 0.0:
            raise ValueError(f"{self.name}: need OFF level 0 plus at least one ON level")
        if any(v <= 0 for v in self.levels[1:]):
            raise ValueError(f"{self.name}: ON levels must be positive")
        if self.kind is not Kind.MULTISTATE and len(self.levels) != 2:
            raise ValueError(f"{self.name}: {self.kind.name} models have exactly one ON level")
        if self.on_duration < 1 or self.off_duration < 1:
            raise ValueError(f"{self.name}: durations must be >= 1 slot")
        if not 0 <= self.jitter < min(self.levels[1:]):
            raise ValueError(f"{self.name}: jitter must stay below the smallest ON level")

    @property
    def period(self) -> int:
        return self.on_duration + self.off_duration


@dataclass(frozen=True)
class NoiseSpec:
    """Unmetered load: ``base`` watts plus pulses arriving at ``pulse_rate`` per slot."""

    target_nar: float = 0.0
    base: float = 20.0
    pulse_rate: float = 0.004
    pulse_levels: tuple[float, float] = (50.0, 1500.0)
    pulse_durations: tuple[int, int] = (6, 180)

    def __post_init__(self):
        if not 0.0 <= self.target_nar < 1.0:
            raise ValueError("target_nar must lie in [0, 1)")
        if self.base < 0 or self.pulse_rate < 0 or min(self.pulse_levels) < 0:
            raise ValueError("noise components must be nonnegative")
        lo, hi = self.pulse_durations
        if not 1 <= lo <= hi:
            raise ValueError("pulse durations must satisfy 1 <= lo <= hi")


def _dwell(rng: np.random.Generator, mean: int) -> int:
    lo = max(1, int(np.floor(0.5 * mean)))
    hi = max(lo, int(np.ceil(1.5 * mean)))
    return int(rng.integers(lo, hi + 1))


def simulate_appliance(model: ApplianceModel, T: int, rng: np.random.Generator) -> np.ndarray:
    """Watts per slot for one appliance over ``T`` slots."""
    out = np.zeros(T)
    if model.kind is Kind.CYCLIC:
        phase = int(rng.integers(0, model.period))
        on = ((np.arange(T) + phase) % model.period) < model.on_duration
        out[on] = model.levels[1]
    else:
        t = -int(rng.integers(0, model.period))
        while t < T:
            t += _dwell(rng, model.off_duration)
            if t >= T:
                break
            d = _dwell(rng, model.on_duration)
            ons = model.levels[1:]
            bounds = np.linspace(t, t + d, len(ons) + 1).round().astype(int)
            for level, a, b in zip(ons, bounds[:-1], bounds[1:]):
                out[max(a, 0) : max(min(b, T), 0)] = level
            t += d
    if model.jitter:
        on = out > 0
        out[on] += rng.uniform(-model.jitter, model.jitter, int(on.sum()))
    return out


def simulate_residual(noise: NoiseSpec, T: int, rng: np.random.Generator) -> np.ndarray:
    """Unscaled unmetered load: nonnegative by construction."""
    eta = np.full(T, float(noise.base))
    n_pulses = int(rng.poisson(noise.pulse_rate * T))
    starts = rng.integers(0, T, n_pulses)
    durs = rng.integers(noise.pulse_durations[0], noise.pulse_durations[1] + 1, n_pulses)
    levels = rng.uniform(noise.pulse_levels[0], noise.pulse_levels[1], n_pulses)
    for s, d, lv in zip(starts, durs, levels):
        eta[s : s + d] += lv
    return eta


def residual_scale(appliance_energy: float, residual_energy: float, target_nar: float) -> float:
    """Factor k with k*E_eta / (E_x + k*E_eta) == target_nar."""
    if target_nar == 0.0:
        return 0.0
    if residual_energy <= 0.0:
        raise InfeasibleNoise("noise model produced no energy; cannot reach a positive NAR")
    if appliance_energy <= 0.0:
        raise InfeasibleNoise("appliances draw no energy; NAR would be 1 for any residual")
    return target_nar * appliance_energy / ((1.0 - target_nar) * residual_energy)


def generate(
    models: Sequence[ApplianceModel],
    noise: NoiseSpec,
    T: int,
    seed: int,
    interval: int = 10,
    start_time: int = 1_388_534_400,
    label: str = "synthetic",
) -> HouseholdDataset:
    if T < 100:
        raise ValueError("T must be at least 100 slots")
    if not models:
        raise ValueError("need at least one appliance model")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ValueError("appliance names must be unique")
    rng = np.random.default_rng(seed)
    apps = {m.name: simulate_appliance(m, T, rng) for m in models}
    eta = simulate_residual(noise, T, rng)
    x_sum = np.sum(list(apps.values()), axis=0)
    k = residual_scale(float(np.sum(x_sum)), float(np.sum(eta)), noise.target_nar)
    if k == 0.0 and float(np.sum(x_sum)) <= 0.0:
        raise InfeasibleNoise("appliances draw no energy; the aggregate would be all zero")
    mains = x_sum + k * eta

    def series(v):
        return PowerSeries.regular(start_time, interval, v, PowerType.ACTIVE)

    return HouseholdDataset(series(mains), {n: series(v) for n, v in apps.items()}, label)


# Reference appliances used by the CLI and the experiment scripts.
CATALOG: dict[str, ApplianceModel] = {
    m.name: m
    for m in [
        ApplianceModel("fridge", Kind.CYCLIC, (0, 90), on_duration=90, off_duration=150, jitter=3),
        ApplianceModel("kettle", Kind.ONOFF, (0, 2000), on_duration=18, off_duration=900, jitter=20),
        ApplianceModel(
            "washing_machine", Kind.MULTISTATE, (0, 2100, 250), on_duration=300, off_duration=4000, jitter=15
        ),
        ApplianceModel("dishwasher", Kind.MULTISTATE, (0, 1900, 80), on_duration=360, off_duration=5000, jitter=10),
        ApplianceModel("microwave", Kind.ONOFF, (0, 1200), on_duration=12, off_duration=1500, jitter=15),
        ApplianceModel("lamp", Kind.ONOFF, (0, 60), on_duration=1500, off_duration=2500),
    ]
}


def catalog_models(names: Sequence[str]) -> list[ApplianceModel]:
    missing = [n for n in names if n not in CATALOG]
    if missing:
        raise KeyError(f"unknown catalog appliance(s): {', '.join(missing)}; known: {', '.join(CATALOG)}")
    return [CATALOG[n] for n in names]
