"""Real-vs-denoised evaluation protocol.

For one household: align, split chronologically, train every algorithm on the
training part (real mains by default), then score each trained model on the
real test mains and on the denoised test mains.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import co, metrics, neural, nn
from .errors import DescriptorError, IncompatiblePowerTypes, MissingKey, UnknownAppliance, UnpairedScenario
from .ingest import load_household, parse_int, parse_statements, read_descriptor
from .noise import compute_nar, denoise
from .timeseries import HouseholdDataset, PowerSeries, align, chrono_split, split_points

log = logging.getLogger(__name__)

ALGORITHMS = ("CO", "LSTM", "S2P")
REAL, DENOISED = "REAL", "DENOISED"
VARIANTS = (REAL, DENOISED)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Path | None
    appliances: tuple[str, ...]
    algorithms: tuple[str, ...] = ALGORITHMS
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    interval: int | None = None
    train: nn.TrainConfig = field(default_factory=nn.TrainConfig)
    output: Path | None = None
    seed: int = 0
    train_variant: str = "real"
    k_max: int = 4
    on_threshold: float = 15.0

    def __post_init__(self):
        if not self.appliances:
            raise ValueError("appliance list must not be empty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"algorithms must be a non-empty subset of {ALGORITHMS}, got {self.algorithms}")
        split_points(100, self.fractions)
        if self.train_variant not in ("real", "denoised"):
            raise ValueError("train_variant must be 'real' or 'denoised'")


@dataclass(frozen=True)
class ScenarioResult:
    household: str
    algorithm: str
    appliance: str
    variant: str
    score: metrics.Score
    nar: float | None


@dataclass(frozen=True)
class GapResult:
    household: str
    algorithm: str
    appliance: str
    gap: metrics.Gap


@dataclass
class ExperimentResult:
    results: list[ScenarioResult]
    gaps: list[GapResult]
    split: tuple[int, int, int]
    # per (algorithm, appliance, variant): test-slot indices, truth and estimate
    traces: dict[tuple[str, str, str], tuple[np.ndarray, np.ndarray, np.ndarray]] = field(repr=False, default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


def _csv_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def parse_experiment_config(text: str, base_dir: str | Path | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (same grammar family as dataset descriptors)."""
    base = Path(base_dir) if base_dir is not None else None
    kv: dict[str, tuple[int, str]] = {}
    for no, key, name, value in parse_statements(text):
        if name is not None:
            raise DescriptorError(f"unexpected name after {key!r}", no)
        if key in kv:
            raise DescriptorError(f"{key!r} given twice", no)
        kv[key] = (no, value)

    def path(key):
        no, v = kv.pop(key)
        p = Path(v)
        return base / p if base is not None and not p.is_absolute() else p

    def integer(key, default, minimum=None):
        if key not in kv:
            return default
        no, v = kv.pop(key)
        return parse_int(v, no, key, minimum)

    def number(key, default):
        if key not in kv:
            return default
        no, v = kv.pop(key)
        try:
            return float(v)
        except ValueError:
            raise DescriptorError(f"{key} must be a number, got {v!r}", no) from None

    for key in ("dataset", "appliances"):
        if key not in kv:
            raise MissingKey(key)
    dataset = path("dataset")
    appliances = _csv_list(kv.pop("appliances")[1])
    algorithms = _csv_list(kv.pop("algorithms")[1]) if "algorithms" in kv else ALGORITHMS
    algorithms = tuple(a.upper() for a in algorithms)
    fractions = (0.7, 0.15, 0.15)
    if "split" in kv:
        no, v = kv.pop("split")
        try:
            fractions = tuple(float(x) for x in _csv_list(v))
            split_points(100, fractions)
        except ValueError:
            raise DescriptorError(f"split must be three fractions summing to 1, got {v!r}", no) from None
    seed = integer("seed", 0)
    train = nn.TrainConfig(
        epochs=integer("epochs", 25, 1),
        batch_size=integer("batch_size", 64, 1),
        learning_rate=number("learning_rate", 1e-3),
        seed=seed,
        epoch_samples=integer("epoch_samples", None, 1),
        val_samples=integer("val_samples", None, 1),
    )
    output = path("output") if "output" in kv else None
    interval = integer("interval", None, 1)
    train_variant = kv.pop("train_variant")[1].lower() if "train_variant" in kv else "real"
    k_max = integer("k_max", 4, 2)
    on_threshold = number("on_threshold", 15.0)
    if kv:
        key, (no, _) = next(iter(kv.items()))
        raise DescriptorError(f"unknown key {key!r}", no)
    try:
        return ExperimentConfig(
            dataset, appliances, algorithms, fractions, interval, train, output, seed, train_variant, k_max, on_threshold
        )
    except ValueError as e:
        raise DescriptorError(str(e)) from None


def read_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_experiment_config(path.read_text(encoding="utf-8"), path.parent)


def load_dataset(config: ExperimentConfig) -> HouseholdDataset:
    desc = read_descriptor(config.dataset)
    if config.interval is not None:
        desc = replace(desc, interval=config.interval)
    return load_household(desc)


def _estimates(algorithm, model, test_real, test_den, appliances):
    """Yield (appliance, variant, estimate series)."""
    if algorithm == "CO":
        real = co.co_disaggregate(test_real.mains, model)
        den = co.co_disaggregate(test_den.mains, model)
        for a in appliances:
            yield a, REAL, real[a]
            yield a, DENOISED, den[a]
    else:
        for a in appliances:
            yield a, REAL, neural.predict(model[a], test_real.mains)
            yield a, DENOISED, neural.predict(model[a], test_den.mains)


def run(config: ExperimentConfig, dataset: HouseholdDataset | None = None) -> ExperimentResult:
    """Run every (algorithm, appliance) job; write result files if ``config.output`` is set.

    Either every job succeeds or an exception propagates and nothing is written.
    """
    ds = align(dataset if dataset is not None else load_dataset(config))
    missing = [a for a in config.appliances if a not in ds.appliances]
    if missing:
        raise UnknownAppliance(f"{ds.label}: no channel named {', '.join(missing)}")
    try:
        nar = compute_nar(ds).nar
    except IncompatiblePowerTypes as e:
        log.warning("%s; NAR not reported", e)
        nar = None

    T = len(ds)
    a, b = split_points(T, config.fractions)
    train, val, test = chrono_split(ds, config.fractions)
    if config.train_variant == "denoised":
        train, val = denoise(train), denoise(val)
    test_den = denoise(test)
    test_slots = np.arange(b, T)
    train_cfg = replace(config.train, seed=config.seed)

    results, traces, timings, trained = [], {}, {}, {}
    for algorithm in config.algorithms:
        t0 = time.perf_counter()
        if algorithm == "CO":
            model = co.fit_states(train, config.k_max, config.on_threshold, list(config.appliances))
        else:
            model = {
                app: neural.fit(train, val, app, neural.architecture(algorithm), train_cfg)
                for app in config.appliances
            }
        for app, variant, est in _estimates(algorithm, model, test, test_den, config.appliances):
            truth = test.appliances[app]
            results.append(ScenarioResult(ds.label, algorithm, app, variant, metrics.score(est, truth), nar))
            traces[(algorithm, app, variant)] = (test_slots, truth.values, est.values)
        timings[algorithm] = time.perf_counter() - t0
        log.info("%s: %s done in %.1f s", ds.label, algorithm, timings[algorithm])
        if algorithm != "CO":
            trained.update({(algorithm, app): m for app, m in model.items()})

    results.sort(key=lambda r: (r.algorithm, r.appliance, r.variant))
    out = ExperimentResult(results, pair_gaps(results), (a, b - a, T - b), traces, timings)
    if config.output is not None:
        write_results(out, config.output)
        if trained:
            models_dir = Path(config.output) / "models"
            models_dir.mkdir(parents=True, exist_ok=True)
            for (algorithm, app), m in sorted(trained.items()):
                m.save(models_dir / f"{algorithm}_{app}.npz")
    return out


def pair_gaps(results: Sequence[ScenarioResult]) -> list[GapResult]:
    by_key: dict[tuple[str, str, str], dict[str, ScenarioResult]] = {}
    for r in results:
        by_key.setdefault((r.household, r.algorithm, r.appliance), {})[r.variant] = r
    gaps = []
    for (hh, alg, app), pair in sorted(by_key.items()):
        if set(pair) != set(VARIANTS):
            raise UnpairedScenario(f"{hh}/{alg}/{app}: have {sorted(pair)}, need both REAL and DENOISED")
        gaps.append(GapResult(hh, alg, app, metrics.gap(pair[REAL].score, pair[DENOISED].score)))
    return gaps


SUMMARY_FIELDS = ["household", "algorithm", "appliance", "variant", "mae", "nde", "slots", "nar"]


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_results(result: ExperimentResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    res_dir = out / "results"
    res_dir.mkdir(parents=True, exist_ok=True)
    for (alg, app, variant), (slots, truth, est) in sorted(result.traces.items()):
        with open(res_dir / f"{alg}_{app}_{variant.lower()}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["slot", "truth_w", "estimate_w"])
            w.writerows(zip(slots.tolist(), map(repr, truth.tolist()), map(repr, est.tolist())))
    write_summary(result.results, res_dir / "summary.csv")
    return res_dir


def write_summary(results: Sequence[ScenarioResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in results:
            w.writerow(
                [r.household, r.algorithm, r.appliance, r.variant, _fmt(r.score.mae), _fmt(r.score.nde), r.score.slots, _fmt(r.nar)]
            )


def read_summary(path: str | Path) -> list[ScenarioResult]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            score = metrics.Score(float(row["mae"]), float(row["nde"]), int(row["slots"]))
            nar = float(row["nar"]) if row["nar"] else None
            out.append(ScenarioResult(row["household"], row["algorithm"], row["appliance"], row["variant"], score, nar))
    return out
