"""Uniform-grid power series and household datasets.

A :class:`PowerSeries` holds integer Unix timestamps on a fixed-interval grid,
float64 watt values and a boolean ``present`` mask. Slots with
``present == False`` are MISSING; their stored value is 0 and must not be read.
After :func:`align` a series may skip grid slots (dropped gaps), but every
timestamp still lies on the original grid.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptySeries, NoOverlap, SplitTooSmall, UnorderedInput

log = logging.getLogger(__name__)


class PowerType(enum.Enum):
    ACTIVE = "P"
    REACTIVE = "Q"
    APPARENT = "S"

    @classmethod
    def parse(cls, code: str) -> "PowerType":
        try:
            return cls(code.strip().upper())
        except ValueError:
            raise ValueError(f"unknown power type {code!r} (expected P, Q or S)") from None


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PowerSeries:
    timestamps: np.ndarray
    values: np.ndarray
    interval: int
    power_type: PowerType = PowerType.ACTIVE
    present: np.ndarray | None = None

    def __post_init__(self):
        ts = _frozen(self.timestamps, np.int64)
        vals = _frozen(self.values, np.float64)
        if ts.ndim != 1 or ts.shape != vals.shape:
            raise ValueError("timestamps and values must be 1-D and of equal length")
        if len(ts) == 0:
            raise EmptySeries("a power series needs at least one slot")
        if self.interval <= 0:
            raise ValueError("interval must be positive")
        if np.any(np.diff(ts) <= 0) or np.any((ts - ts[0]) % self.interval):
            raise ValueError("timestamps must be strictly increasing on the interval grid")
        present = np.ones(len(ts), bool) if self.present is None else np.asarray(self.present, bool)
        if present.shape != ts.shape:
            raise ValueError("present mask has the wrong length")
        vals = np.where(present, vals, 0.0)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("present values must be finite and nonnegative")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", _frozen(vals, np.float64))
        object.__setattr__(self, "present", _frozen(present, bool))

    @classmethod
    def regular(cls, start_time: int, interval: int, values, power_type=PowerType.ACTIVE, present=None):
        values = np.asarray(values, dtype=np.float64)
        ts = start_time + interval * np.arange(len(values), dtype=np.int64)
        return cls(ts, values, interval, power_type, present)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return (
            self.interval == other.interval
            and self.power_type == other.power_type
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.present, other.present)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def start_time(self) -> int:
        return int(self.timestamps[0])

    @property
    def complete(self) -> bool:
        return bool(self.present.all())

    def same_grid(self, other: "PowerSeries") -> bool:
        return self.interval == other.interval and np.array_equal(self.timestamps, other.timestamps)

    def with_values(self, values, power_type=None) -> "PowerSeries":
        """Copy on the same grid with new values (all present unless masked here)."""
        return PowerSeries(
            self.timestamps, values, self.interval, power_type or self.power_type, self.present
        )

    def take(self, idx) -> "PowerSeries":
        return PowerSeries(
            self.timestamps[idx], self.values[idx], self.interval, self.power_type, self.present[idx]
        )


@dataclass(frozen=True, eq=False)
class HouseholdDataset:
    mains: PowerSeries
    appliances: Mapping[str, PowerSeries]
    label: str = "household"

    def __post_init__(self):
        apps = dict(self.appliances)
        for name, s in apps.items():
            if not s.same_grid(self.mains):
                raise ValueError(f"appliance {name!r} is not on the mains grid")
        types = {s.power_type for s in apps.values()}
        if len(types) > 1:
            raise ValueError("all appliance channels must share one power type")
        object.__setattr__(self, "appliances", apps)

    def __len__(self):
        return len(self.mains)

    def __eq__(self, other):
        if not isinstance(other, HouseholdDataset):
            return NotImplemented
        return (
            self.label == other.label
            and self.mains == other.mains
            and list(self.appliances) == list(other.appliances)
            and all(self.appliances[k] == other.appliances[k] for k in self.appliances)
        )

    __hash__ = None

    @property
    def names(self) -> list[str]:
        return list(self.appliances)

    @property
    def appliance_power_type(self) -> PowerType | None:
        for s in self.appliances.values():
            return s.power_type
        return None

    @property
    def interval(self) -> int:
        return self.mains.interval

    def channels(self) -> list[PowerSeries]:
        return [self.mains, *self.appliances.values()]

    def appliance_sum(self) -> np.ndarray:
        if not self.appliances:
            return np.zeros(len(self))
        return np.sum([s.values for s in self.appliances.values()], axis=0)

    def take(self, idx) -> "HouseholdDataset":
        return HouseholdDataset(
            self.mains.take(idx), {k: s.take(idx) for k, s in self.appliances.items()}, self.label
        )

    def replace_mains(self, mains: PowerSeries) -> "HouseholdDataset":
        return replace(self, mains=mains)


@dataclass(frozen=True)
class FillPolicy:
    """Forward fill bounded to ``max_gap`` slots after the last observation."""

    max_gap: int = 3

    def __post_init__(self):
        if self.max_gap < 0:
            raise ValueError("max_gap must be >= 0")


def resample(
    raw: Iterable[tuple[int, float]] | np.ndarray,
    interval: int,
    policy: FillPolicy = FillPolicy(),
    power_type: PowerType = PowerType.ACTIVE,
) -> PowerSeries:
    """Put (timestamp, watts) observations on an ``interval`` grid.

    The grid runs from the first timestamp rounded down to the last rounded
    up, both to multiples of ``interval``. Each slot takes the latest
    observation at or before it, unless that observation is more than
    ``policy.max_gap`` intervals old, in which case the slot is MISSING.
    Non-finite readings count as absent; negative readings are clamped to 0.
    """
    if interval <= 0:
        raise ValueError("interval must be positive")
    arr = np.asarray(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=np.float64)
    if arr.size == 0:
        raise EmptySeries("no observations to resample")
    arr = arr.reshape(-1, 2)
    ts = arr[:, 0].astype(np.int64)
    watts = arr[:, 1]
    if np.any(np.diff(ts) <= 0):
        raise UnorderedInput("raw timestamps must be strictly increasing")
    ok = np.isfinite(watts)
    ts, watts = ts[ok], watts[ok]
    if ts.size == 0:
        raise EmptySeries("no finite observations to resample")
    negative = int(np.count_nonzero(watts < 0))
    if negative:
        log.warning("clamped %d negative readings to 0 W", negative)
        watts = np.maximum(watts, 0.0)

    first = (ts[0] // interval) * interval
    last = -((-ts[-1]) // interval) * interval
    grid = np.arange(first, last + interval, interval, dtype=np.int64)
    src = np.searchsorted(ts, grid, side="right") - 1
    present = src >= 0
    srcc = np.clip(src, 0, None)
    age = grid - ts[srcc]
    present &= age <= policy.max_gap * interval
    values = np.where(present, watts[srcc], 0.0)
    return PowerSeries(grid, values, interval, power_type, present)


def align(ds: HouseholdDataset) -> HouseholdDataset:
    """Keep only the slots where mains and every appliance are present."""
    channels = ds.channels()
    if len({c.interval for c in channels}) != 1:
        raise ValueError("all channels must share one interval")
    if all(c.same_grid(ds.mains) for c in channels):
        keep = np.logical_and.reduce([c.present for c in channels])
        if keep.all():
            return ds
        if not keep.any():
            raise NoOverlap(f"{ds.label}: no slot where every channel is present")
        return ds.take(np.flatnonzero(keep))
    return align_series(ds.mains, ds.appliances, ds.label)


def align_series(
    mains: PowerSeries, appliances: Mapping[str, PowerSeries], label: str = "household"
) -> HouseholdDataset:
    """Intersect channels that may sit on different spans of a shared grid."""
    channels = [mains, *appliances.values()]
    if len({c.interval for c in channels}) != 1:
        raise ValueError("all channels must share one interval")
    common = channels[0].timestamps[channels[0].present]
    for c in channels[1:]:
        common = np.intersect1d(common, c.timestamps[c.present], assume_unique=True)
    if common.size == 0:
        raise NoOverlap(f"{label}: no slot where every channel is present")

    def pick(s):
        return s.take(np.searchsorted(s.timestamps, common))

    return HouseholdDataset(pick(mains), {k: pick(s) for k, s in appliances.items()}, label)


def split_points(T: int, fractions: Sequence[float]) -> tuple[int, int]:
    f_train, f_val, f_test = fractions
    if min(fractions) <= 0 or abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise ValueError("split fractions must be positive and sum to 1")
    # rounding first keeps e.g. 100 * (0.7 + 0.15) at 85, not 84
    a = math.floor(round(T * f_train, 9))
    b = math.floor(round(T * (f_train + f_val), 9))
    return a, b


def chrono_split(
    ds: HouseholdDataset, fractions: Sequence[float] = (0.7, 0.15, 0.15)
) -> tuple[HouseholdDataset, HouseholdDataset, HouseholdDataset]:
    """Contiguous train/validation/test partition in time order."""
    T = len(ds)
    a, b = split_points(T, fractions)
    if a == 0 or b == a or b == T:
        raise SplitTooSmall(f"T={T} leaves an empty partition for fractions {tuple(fractions)}")
    return ds.take(slice(0, a)), ds.take(slice(a, b)), ds.take(slice(b, T))
