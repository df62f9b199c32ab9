"""Window regressors: LSTM (window 49, predicts the last slot) and
sequence-to-point CNN (window 99, predicts the midpoint)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import nn
from .errors import UnknownAppliance, WindowTooLong
from .timeseries import HouseholdDataset, PowerSeries


class Mode(enum.Enum):
    MIDPOINT = "midpoint"
    LAST = "last"


@dataclass(frozen=True)
class Architecture:
    name: str
    window: int
    mode: Mode
    layers: tuple[nn.LayerSpec, ...]


S2P_W99 = Architecture(
    "S2P_W99",
    99,
    Mode.MIDPOINT,
    (
        nn.Conv1D(16, 9), nn.Relu(),
        nn.Conv1D(16, 7), nn.Relu(),
        nn.Conv1D(24, 5), nn.Relu(),
        nn.Flatten(),
        nn.Dense(256), nn.Relu(),
        nn.Dense(1),
    ),
)  # fmt: skip

LSTM_W49 = Architecture(
    "LSTM_W49",
    49,
    Mode.LAST,
    (
        nn.Conv1D(16, 4),
        nn.Lstm(32, return_sequences=True),
        nn.Lstm(64),
        nn.Dense(64), nn.Relu(),
        nn.Dense(1),
    ),
)  # fmt: skip

ARCHITECTURES = {a.name: a for a in (S2P_W99, LSTM_W49)}
# short algorithm names used in experiment configs
ALIASES = {"S2P": "S2P_W99", "LSTM": "LSTM_W49"}


def architecture(name: str) -> Architecture:
    return ARCHITECTURES[ALIASES.get(name, name)]


def padding(window: int, mode: Mode) -> tuple[int, int]:
    if mode is Mode.MIDPOINT:
        if window % 2 == 0:
            raise ValueError("midpoint windows must have odd length")
        half = (window - 1) // 2
        return half, half
    return window - 1, 0


def make_windows(values: np.ndarray, window: int, mode: Mode, pad_value: float) -> tuple[np.ndarray, np.ndarray]:
    """Stride-1 windows, one per slot, as a read-only ``(T, window)`` view.

    The series is padded with ``pad_value`` so that the window for slot ``t``
    has ``t`` at its midpoint (MIDPOINT) or at its end (LAST). Returns the
    windows and the index of the slot each window predicts.
    """
    values = np.asarray(values, dtype=np.float64)
    T = len(values)
    if window > T:
        raise WindowTooLong(f"window {window} is longer than the series ({T} slots)")
    left, right = padding(window, mode)
    padded = np.concatenate([np.full(left, pad_value), values, np.full(right, pad_value)])
    return sliding_window_view(padded, window), np.arange(T)


@dataclass
class NeuralModel:
    arch: Architecture
    appliance: str
    network: nn.Network
    input_mean: float
    input_std: float
    target_scale: float
    seed: int

    @property
    def window(self) -> int:
        return self.arch.window

    def _inputs(self, aggregate: np.ndarray) -> np.ndarray:
        z = (np.asarray(aggregate, dtype=np.float64) - self.input_mean) / self.input_std
        # pad with the standardised training mean, i.e. 0
        windows, _ = make_windows(z, self.window, self.arch.mode, 0.0)
        return windows[..., None]

    def save(self, path: str | Path) -> None:
        meta = {
            "architecture": self.arch.name,
            "appliance": self.appliance,
            "input_mean": self.input_mean,
            "input_std": self.input_std,
            "target_scale": self.target_scale,
            "train_seed": self.seed,
        }
        nn.save_network(path, self.network, meta)

    @classmethod
    def load(cls, path: str | Path) -> "NeuralModel":
        net, meta = nn.load_network(path)
        arch = ARCHITECTURES[meta["architecture"]]
        return cls(
            arch, meta["appliance"], net, meta["input_mean"], meta["input_std"], meta["target_scale"], meta["train_seed"]
        )


def _stats(mains: np.ndarray, target: np.ndarray) -> tuple[float, float, float]:
    mean = float(np.mean(mains))
    std = float(np.std(mains))
    if not std > 0:
        std = 1.0
    return mean, std, max(float(np.std(target)), 1.0)


def fit(
    train: HouseholdDataset,
    val: HouseholdDataset | None,
    appliance: str,
    arch: Architecture | str,
    cfg: nn.TrainConfig = nn.TrainConfig(),
) -> NeuralModel:
    """Train one network for ``appliance`` on the mains of ``train``.

    Inputs are standardised with the training aggregate's mean and std;
    targets are divided by the training appliance std (at least 1 W).
    """
    if isinstance(arch, str):
        arch = architecture(arch)
    for part in (train, val):
        if part is not None and appliance not in part.appliances:
            raise UnknownAppliance(f"{appliance!r} is not a channel of {part.label!r}")
    mains = train.mains.values
    target = train.appliances[appliance].values
    mean, std, scale = _stats(mains, target)
    net = nn.Network(arch.layers, (arch.window, 1), seed=cfg.seed)
    model = NeuralModel(arch, appliance, net, mean, std, scale, cfg.seed)
    x = model._inputs(mains)
    y = (target / scale)[:, None]
    validation = None
    if val is not None:
        validation = (model._inputs(val.mains.values), (val.appliances[appliance].values / scale)[:, None])
    nn.train(net, x, y, cfg, validation)
    return model


def predict(model: NeuralModel, aggregate: PowerSeries, batch_size: int = 2048) -> PowerSeries:
    """Per-slot estimate in watts, clamped at 0, on the aggregate's grid."""
    x = model._inputs(aggregate.values)
    out = model.network.predict(x, batch_size)[:, 0] * model.target_scale
    return aggregate.with_values(np.maximum(out, 0.0))
