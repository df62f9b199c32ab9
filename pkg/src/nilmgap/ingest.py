"""Household descriptors and per-channel CSV files.

Descriptor grammar, one statement per line, ``#`` starts a comment::

    label = REFIT house 2
    interval = 10
    max_gap = 3
    mains = house2/mains.csv : P
    appliance kettle = house2/kettle.csv : P

Channel CSVs hold ``timestamp,power`` rows (integer Unix seconds, watts); one
leading header row is skipped if it does not start with a digit.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CsvParseError, DescriptorError, DuplicateName, EmptySeries, MissingKey
from .timeseries import FillPolicy, HouseholdDataset, PowerSeries, PowerType, align_series, resample

_STATEMENT = re.compile(r"^(?P<key>[A-Za-z_]+)(?:\s+(?P<name>\S+))?\s*=\s*(?P<value>.*?)\s*$")


def parse_statements(text: str) -> list[tuple[int, str, str | None, str]]:
    """Split key-value text into ``(line_no, key, name, value)`` tuples."""
    out = []
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _STATEMENT.match(line)
        if m is None or not m["value"]:
            raise DescriptorError(f"cannot parse {line!r}", no)
        out.append((no, m["key"].lower(), m["name"], m["value"]))
    return out


def parse_int(value: str, no: int, key: str, minimum: int | None = None) -> int:
    try:
        v = int(value)
    except ValueError:
        raise DescriptorError(f"{key} must be an integer, got {value!r}", no) from None
    if minimum is not None and v < minimum:
        raise DescriptorError(f"{key} must be >= {minimum}", no)
    return v


@dataclass(frozen=True)
class ChannelSpec:
    path: Path
    power_type: PowerType


@dataclass(frozen=True)
class DatasetDescriptor:
    label: str
    interval: int
    mains: ChannelSpec
    appliances: dict[str, ChannelSpec]
    fill: FillPolicy = field(default_factory=FillPolicy)


def _channel(value: str, no: int, base: Path | None) -> ChannelSpec:
    path, sep, code = value.rpartition(":")
    path = path.strip()
    if not sep or not path:
        raise DescriptorError(f"expected '<path> : <P|Q|S>', got {value!r}", no)
    try:
        ptype = PowerType.parse(code)
    except ValueError as e:
        raise DescriptorError(str(e), no) from None
    p = Path(path)
    if base is not None and not p.is_absolute():
        p = base / p
    return ChannelSpec(p, ptype)


def parse_descriptor(text: str, base_dir: str | Path | None = None) -> DatasetDescriptor:
    """Parse descriptor text; relative paths resolve against ``base_dir``."""
    base = Path(base_dir) if base_dir is not None else None
    seen: dict[str, str] = {}
    interval = None
    max_gap = FillPolicy().max_gap
    mains = None
    appliances: dict[str, ChannelSpec] = {}
    label = None
    for no, key, name, value in parse_statements(text):
        if key == "appliance":
            if name is None:
                raise DescriptorError("appliance statement needs a name", no)
            if name in appliances:
                raise DuplicateName(f"duplicate appliance name {name!r}", no)
            appliances[name] = _channel(value, no, base)
            continue
        if name is not None:
            raise DescriptorError(f"unexpected name after {key!r}", no)
        if key in seen:
            raise DescriptorError(f"{key!r} given twice", no)
        seen[key] = value
        if key == "label":
            label = value
        elif key == "interval":
            interval = parse_int(value, no, key, minimum=1)
        elif key == "max_gap":
            max_gap = parse_int(value, no, key, minimum=0)
        elif key == "mains":
            mains = _channel(value, no, base)
        else:
            raise DescriptorError(f"unknown key {key!r}", no)
    for key, v in (("label", label), ("interval", interval), ("mains", mains)):
        if v is None:
            raise MissingKey(key)
    if not appliances:
        raise MissingKey("appliance")
    return DatasetDescriptor(label, interval, mains, appliances, FillPolicy(max_gap))


def read_descriptor(path: str | Path) -> DatasetDescriptor:
    path = Path(path)
    return parse_descriptor(path.read_text(encoding="utf-8"), path.parent)


def read_channel_csv(path: str | Path) -> np.ndarray:
    """Read a ``timestamp,power`` file into an (n, 2) float array."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if i == 1 and not row[0].strip()[:1].isdigit():
                continue
            if len(row) != 2:
                raise CsvParseError(path, i, f"expected 2 columns, got {len(row)}")
            try:
                rows.append((int(row[0]), float(row[1])))
            except ValueError:
                raise CsvParseError(path, i, f"cannot parse {row!r}") from None
    if not rows:
        raise EmptySeries(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def load_household(desc: DatasetDescriptor) -> HouseholdDataset:
    """Read, resample and align every channel named by ``desc``."""

    def load(spec: ChannelSpec) -> PowerSeries:
        return resample(read_channel_csv(spec.path), desc.interval, desc.fill, spec.power_type)

    mains = load(desc.mains)
    apps = {name: load(spec) for name, spec in desc.appliances.items()}
    return align_series(mains, apps, desc.label)


def write_channel_csv(path: str | Path, series: PowerSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "power"])
        for t, v, ok in zip(series.timestamps.tolist(), series.values.tolist(), series.present.tolist()):
            if ok:
                w.writerow([t, repr(v)])


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def write_household(ds: HouseholdDataset, out_dir: str | Path, max_gap: int = 3) -> Path:
    """Write ``ds`` as ``household.conf`` plus one CSV per channel; return the descriptor path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_channel_csv(out / "mains.csv", ds.mains)
    lines = [
        f"label = {ds.label}",
        f"interval = {ds.interval}",
        f"max_gap = {max_gap}",
        f"mains = mains.csv : {ds.mains.power_type.value}",
    ]
    for name, s in ds.appliances.items():
        fname = f"{_safe(name)}.csv"
        write_channel_csv(out / fname, s)
        lines.append(f"appliance {name} = {fname} : {s.power_type.value}")
    conf = out / "household.conf"
    conf.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return conf
