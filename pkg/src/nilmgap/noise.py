"""Residual load, noise-aggregate ratio (NAR) and denoised aggregates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAggregate, IncompatiblePowerTypes
from .timeseries import HouseholdDataset, PowerSeries


@dataclass(frozen=True)
class NoiseReport:
    nar: float
    total_aggregate_energy: float
    total_residual: float
    slots_used: int

    @property
    def percent(self) -> float:
        return 100.0 * self.nar


def _check_types(ds: HouseholdDataset) -> None:
    app_type = ds.appliance_power_type
    if app_type is not None and app_type != ds.mains.power_type:
        raise IncompatiblePowerTypes(
            f"{ds.label}: mains is {ds.mains.power_type.value}, appliances are {app_type.value}"
        )


def _complete_slots(ds: HouseholdDataset) -> np.ndarray:
    return np.logical_and.reduce([c.present for c in ds.channels()])


def residual(ds: HouseholdDataset) -> PowerSeries:
    """|mains - sum of appliances| per slot; MISSING wherever any channel is."""
    _check_types(ds)
    r = np.abs(ds.mains.values - ds.appliance_sum())
    return PowerSeries(ds.mains.timestamps, r, ds.interval, ds.mains.power_type, _complete_slots(ds))


def compute_nar(ds: HouseholdDataset) -> NoiseReport:
    r = residual(ds)
    used = r.present
    total_y = float(np.sum(ds.mains.values[used]))
    if not total_y > 0.0:
        raise DegenerateAggregate(f"{ds.label}: aggregate energy is zero over complete slots")
    total_r = float(np.sum(r.values[used]))
    return NoiseReport(total_r / total_y, total_y, total_r, int(used.sum()))


def denoise(ds: HouseholdDataset) -> HouseholdDataset:
    """Replace the mains with the superposition of the appliance channels."""
    if not ds.appliances:
        raise ValueError("denoising needs at least one appliance channel")
    present = _complete_slots(ds)
    mains = PowerSeries(
        ds.mains.timestamps, ds.appliance_sum(), ds.interval, ds.appliance_power_type, present
    )
    return ds.replace_mains(mains)
