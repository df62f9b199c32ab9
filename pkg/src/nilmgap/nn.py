"""A small float64 neural-network engine with hand-written backpropagation.

Layers: dense, 1-D convolution (valid padding), LSTM, ReLU and flatten.
Sequence tensors are laid out ``(batch, length, channels)``. Training uses Adam
on mean-squared error with a seeded minibatch order, so a given seed
reproduces parameters bit for bit.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NonFiniteError, ShapeError, TrainingDiverged

FORMAT_VERSION = 1

DENSE, CONV1D, LSTM, RELU, FLATTEN = "dense", "conv1d", "lstm", "relu", "flatten"


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    size: int = 0  # dense outputs, conv filters or LSTM units
    kernel: int = 0
    stride: int = 1
    return_sequences: bool = False

    def __post_init__(self):
        if self.kind not in (DENSE, CONV1D, LSTM, RELU, FLATTEN):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in (DENSE, CONV1D, LSTM) and self.size < 1:
            raise ValueError(f"{self.kind} needs a positive size")
        if self.kind == CONV1D and (self.kernel < 1 or self.stride < 1):
            raise ValueError("conv1d needs positive kernel and stride")


def Dense(out: int) -> LayerSpec:
    return LayerSpec(DENSE, out)


def Conv1D(filters: int, kernel: int, stride: int = 1) -> LayerSpec:
    return LayerSpec(CONV1D, filters, kernel, stride)


def Lstm(units: int, return_sequences: bool = False) -> LayerSpec:
    return LayerSpec(LSTM, units, return_sequences=return_sequences)


def Relu() -> LayerSpec:
    return LayerSpec(RELU)


def Flatten() -> LayerSpec:
    return LayerSpec(FLATTEN)


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class Layer:
    """Base layer: ``params``/``grads`` map names to arrays of equal shape."""

    def __init__(self, spec: LayerSpec, in_shape: tuple[int, ...]):
        self.spec = spec
        self.in_shape = in_shape
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def init(self, rng: np.random.Generator) -> None:
        pass

    def zero_grads(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}


class DenseLayer(Layer):
    def __init__(self, spec, in_shape):
        super().__init__(spec, in_shape)
        if len(in_shape) != 1:
            raise ShapeError(f"dense layer expects flat input, got shape {in_shape}")
        self.out_shape = (spec.size,)
        self.params = {"W": np.zeros((in_shape[0], spec.size)), "b": np.zeros(spec.size)}

    def init(self, rng):
        n_in, n_out = self.params["W"].shape
        self.params["W"] = glorot(rng, (n_in, n_out), n_in, n_out)

    def forward(self, x):
        self.x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy):
        self.grads["W"] = self.x.T @ dy
        self.grads["b"] = dy.sum(axis=0)
        return dy @ self.params["W"].T


class Conv1DLayer(Layer):
    def __init__(self, spec, in_shape):
        super().__init__(spec, in_shape)
        if len(in_shape) != 2:
            raise ShapeError(f"conv1d expects (length, channels), got {in_shape}")
        L, C = in_shape
        if spec.kernel > L:
            raise ShapeError(f"kernel {spec.kernel} longer than input length {L}")
        self.L_out = (L - spec.kernel) // spec.stride + 1
        self.out_shape = (self.L_out, spec.size)
        # W rows are ordered (channel, tap)
        self.params = {"W": np.zeros((C * spec.kernel, spec.size)), "b": np.zeros(spec.size)}

    def init(self, rng):
        C, k, F = self.in_shape[1], self.spec.kernel, self.spec.size
        self.params["W"] = glorot(rng, (C * k, F), C * k, F * k)

    def forward(self, x):
        B = x.shape[0]
        k, s = self.spec.kernel, self.spec.stride
        win = sliding_window_view(x, k, axis=1)[:, :: s]  # (B, L_out, C, k)
        self.cols = np.ascontiguousarray(win).reshape(B * self.L_out, -1)
        y = self.cols @ self.params["W"] + self.params["b"]
        return y.reshape(B, self.L_out, -1)

    def backward(self, dy):
        B = dy.shape[0]
        k, s = self.spec.kernel, self.spec.stride
        L, C = self.in_shape
        dy2 = dy.reshape(B * self.L_out, -1)
        self.grads["W"] = self.cols.T @ dy2
        self.grads["b"] = dy2.sum(axis=0)
        dcols = (dy2 @ self.params["W"].T).reshape(B, self.L_out, C, k)
        dx = np.zeros((B, L, C))
        span = s * (self.L_out - 1) + 1
        for j in range(k):
            dx[:, j : j + span : s, :] += dcols[:, :, :, j]
        return dx


class LSTMLayer(Layer):
    """LSTM with gate blocks ordered (input, forget, output, candidate)."""

    def __init__(self, spec, in_shape):
        super().__init__(spec, in_shape)
        if len(in_shape) != 2:
            raise ShapeError(f"lstm expects (length, channels), got {in_shape}")
        L, C = in_shape
        H = spec.size
        self.out_shape = (L, H) if spec.return_sequences else (H,)
        self.params = {"Wx": np.zeros((C, 4 * H)), "Wh": np.zeros((H, 4 * H)), "b": np.zeros(4 * H)}

    def init(self, rng):
        C, H4 = self.params["Wx"].shape
        H = H4 // 4
        self.params["Wx"] = glorot(rng, (C, H4), C, H4)
        self.params["Wh"] = glorot(rng, (H, H4), H, H4)

    def forward(self, x):
        B, L, C = x.shape
        H = self.spec.size
        Wh = self.params["Wh"]
        self.x = x
        zx = (x.reshape(B * L, C) @ self.params["Wx"] + self.params["b"]).reshape(B, L, 4 * H)
        gates = np.empty((B, L, 4 * H))
        c = np.zeros((B, L + 1, H))
        h = np.zeros((B, L + 1, H))
        tc = np.empty((B, L, H))
        for t in range(L):
            z = zx[:, t] + h[:, t] @ Wh
            g = gates[:, t]
            g[:, : 3 * H] = _sigmoid(z[:, : 3 * H])
            g[:, 3 * H :] = np.tanh(z[:, 3 * H :])
            ct = g[:, H : 2 * H] * c[:, t] + g[:, :H] * g[:, 3 * H :]
            c[:, t + 1] = ct
            tc[:, t] = np.tanh(ct)
            h[:, t + 1] = g[:, 2 * H : 3 * H] * tc[:, t]
        self.gates, self.c, self.h, self.tc = gates, c, h, tc
        if self.spec.return_sequences:
            return h[:, 1:].copy()
        return h[:, L].copy()

    def backward(self, dy):
        B, L, C = self.x.shape
        H = self.spec.size
        WhT = self.params["Wh"].T.copy()
        g, tc = self.gates, self.tc
        i, f, o, cand = g[..., :H], g[..., H : 2 * H], g[..., 2 * H : 3 * H], g[..., 3 * H :]
        # local derivative factors do not depend on the recursion
        dc_from_h = o * (1.0 - tc * tc)
        coef = np.empty((B, L, 4 * H))
        coef[..., :H] = cand * i * (1.0 - i)
        coef[..., H : 2 * H] = self.c[:, :L] * f * (1.0 - f)
        coef[..., 3 * H :] = i * (1.0 - cand * cand)
        do_coef = tc * o * (1.0 - o)
        dz = np.empty((B, L, 4 * H))
        dh = np.zeros((B, H))
        dc = np.zeros((B, H))
        seq = self.spec.return_sequences
        if not seq:
            dh = dh + dy
        for t in reversed(range(L)):
            if seq:
                dh = dh + dy[:, t]
            dc = dc + dh * dc_from_h[:, t]
            d = dz[:, t]
            d[:, :H] = dc * coef[:, t, :H]
            d[:, H : 2 * H] = dc * coef[:, t, H : 2 * H]
            d[:, 2 * H : 3 * H] = dh * do_coef[:, t]
            d[:, 3 * H :] = dc * coef[:, t, 3 * H :]
            dc = dc * f[:, t]
            dh = d @ WhT
        dz2 = dz.reshape(B * L, 4 * H)
        self.grads["Wx"] = self.x.reshape(B * L, C).T @ dz2
        self.grads["Wh"] = self.h[:, :L].reshape(B * L, H).T @ dz2
        self.grads["b"] = dz2.sum(axis=0)
        return (dz2 @ self.params["Wx"].T).reshape(B, L, C)


class ReluLayer(Layer):
    def __init__(self, spec, in_shape):
        super().__init__(spec, in_shape)
        self.out_shape = in_shape

    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, dy):
        return np.where(self.mask, dy, 0.0)


class FlattenLayer(Layer):
    def __init__(self, spec, in_shape):
        super().__init__(spec, in_shape)
        self.out_shape = (int(np.prod(in_shape)),)

    def forward(self, x):
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape((dy.shape[0], *self.in_shape))


_LAYERS = {DENSE: DenseLayer, CONV1D: Conv1DLayer, LSTM: LSTMLayer, RELU: ReluLayer, FLATTEN: FlattenLayer}


class Network:
    """Sequential stack built for a fixed per-sample ``input_shape``.

    Parameters are a pure function of ``(specs, input_shape, seed)``: layer
    ``i`` draws from ``default_rng([seed, i])``.
    """

    def __init__(self, specs: Sequence[LayerSpec], input_shape: Sequence[int], seed: int = 0, init: bool = True):
        self.specs = list(specs)
        self.input_shape = tuple(int(d) for d in input_shape)
        self.seed = int(seed)
        self.layers: list[Layer] = []
        shape = self.input_shape
        for i, spec in enumerate(self.specs):
            layer = _LAYERS[spec.kind](spec, shape)
            if init:
                layer.init(np.random.default_rng([self.seed, i]))
            self.layers.append(layer)
            shape = layer.out_shape
        self.output_shape = shape

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ShapeError(f"expected input (batch, {self.input_shape}), got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x)
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("network produced a non-finite output")
        return x

    def backward(self, dout: np.ndarray) -> None:
        for layer in reversed(self.layers):
            dout = layer.backward(dout)

    def predict(self, x: np.ndarray, batch_size: int = 2048) -> np.ndarray:
        if len(x) == 0:
            return np.zeros((0, *self.output_shape))
        return np.concatenate([self.forward(x[i : i + batch_size]) for i in range(0, len(x), batch_size)])

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [(f"{i}.{k}", v) for i, layer in enumerate(self.layers) for k, v in layer.params.items()]

    def gradients(self) -> list[np.ndarray]:
        return [layer.grads[k] for layer in self.layers for k in layer.params]

    def get_state(self) -> list[np.ndarray]:
        return [v.copy() for _, v in self.parameters()]

    def set_state(self, state: Sequence[np.ndarray]) -> None:
        it = iter(state)
        for layer in self.layers:
            for k in layer.params:
                v = next(it)
                if v.shape != layer.params[k].shape:
                    raise ShapeError(f"parameter {k} has shape {v.shape}, expected {layer.params[k].shape}")
                layer.params[k] = np.array(v, dtype=np.float64)

    @property
    def n_params(self) -> int:
        return sum(v.size for _, v in self.parameters())


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))


def backward(net: Network, x: np.ndarray, target: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """MSE loss and its exact gradient for every parameter, in ``net.parameters()`` order."""
    out = net.forward(x)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != out.shape:
        raise ShapeError(f"target shape {target.shape} != output shape {out.shape}")
    diff = out - target
    net.backward(2.0 * diff / diff.size)
    return float(np.mean(diff * diff)), net.gradients()


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings.

    ``epoch_samples`` caps how many training samples one epoch visits (a fresh
    seeded draw each epoch); ``val_samples`` evaluates validation loss on an
    evenly spaced fixed subset. ``None`` means all samples.
    """

    epochs: int = 25
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    epoch_samples: int | None = None
    val_samples: int | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1


class Adam:
    def __init__(self, params: list[np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        a = c.learning_rate * np.sqrt(1.0 - c.beta2**self.t) / (1.0 - c.beta1**self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p -= a * m / (np.sqrt(v) + c.eps)


def _subset(n: int, cap: int | None) -> np.ndarray:
    if cap is None or cap >= n:
        return np.arange(n)
    return np.linspace(0, n - 1, cap).round().astype(np.int64)


def evaluate(net: Network, x: np.ndarray, y: np.ndarray, batch_size: int = 2048) -> float:
    total = 0.0
    for i in range(0, len(x), batch_size):
        d = net.forward(x[i : i + batch_size]) - y[i : i + batch_size]
        total += float(np.sum(d * d))
    return total / (len(x) * int(np.prod(net.output_shape)))


def train(
    net: Network,
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig = TrainConfig(),
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[Network, History]:
    """Fit ``net`` in place and restore the epoch with the lowest validation MSE.

    Without validation data the training loss selects the epoch instead.
    ``inputs`` may be a lazy view (e.g. sliding windows); batches are gathered
    by index.
    """
    n = len(inputs)
    if n == 0 or len(targets) != n:
        raise ValueError("need a non-empty dataset with one target per input")
    rng = np.random.default_rng(cfg.seed)
    params = [layer.params[k] for layer in net.layers for k in layer.params]
    opt = Adam(params, cfg)
    hist = History()
    best_loss, best_state = np.inf, net.get_state()
    if validation is not None:
        vidx = _subset(len(validation[0]), cfg.val_samples)
        vx, vy = validation[0][vidx], validation[1][vidx]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        if cfg.epoch_samples is not None:
            order = order[: cfg.epoch_samples]
        total = 0.0
        for i in range(0, len(order), cfg.batch_size):
            idx = np.sort(order[i : i + cfg.batch_size])
            try:
                # overflow is reported below as TrainingDiverged
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, grads = backward(net, inputs[idx], targets[idx])
            except NonFiniteError as e:
                raise TrainingDiverged(f"epoch {epoch + 1}: {e}") from None
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                raise TrainingDiverged(f"epoch {epoch + 1}: loss or gradient became non-finite")
            opt.step(params, grads)
            total += loss * len(idx)
        hist.train_loss.append(total / len(order))
        if validation is not None:
            try:
                score = evaluate(net, vx, vy)
            except NonFiniteError as e:
                raise TrainingDiverged(f"epoch {epoch + 1}: {e}") from None
            hist.val_loss.append(score)
        else:
            score = hist.train_loss[-1]
        if score < best_loss:
            best_loss, best_state, hist.best_epoch = score, net.get_state(), epoch
    net.set_state(best_state)
    return net, hist


def save_network(path: str | Path, net: Network, meta: dict | None = None) -> None:
    """Write layer specs, parameters and free-form metadata to one ``.npz`` file."""
    header = {
        "format": "nilmgap-network",
        "version": FORMAT_VERSION,
        "input_shape": list(net.input_shape),
        "seed": net.seed,
        "layers": [asdict(s) for s in net.specs],
        "meta": meta or {},
    }
    arrays = {f"p{i:03d}": v for i, (_, v) in enumerate(net.parameters())}
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    Path(path).write_bytes(buf.getvalue())


def load_network(path: str | Path) -> tuple[Network, dict]:
    with np.load(path) as z:
        header = json.loads(z["header"].tobytes().decode())
        if header.get("format") != "nilmgap-network" or header.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: not a version-{FORMAT_VERSION} network file")
        specs = [LayerSpec(**d) for d in header["layers"]]
        net = Network(specs, header["input_shape"], header["seed"], init=False)
        net.set_state([z[f"p{i:03d}"] for i in range(len(net.parameters()))])
    return net, header["meta"]
