import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilmgap import synth
from nilmgap.co import StateTable, best_combinations, co_disaggregate, fit_states, kmeans_1d
from nilmgap.errors import SearchSpaceTooLarge
from nilmgap.metrics import mae
from nilmgap.noise import denoise
from nilmgap.synth import ApplianceModel, Kind
from nilmgap.timeseries import HouseholdDataset, PowerSeries


def brute_force(y, levels):
    """Independent enumerator: (min cost, first index vector attaining it)."""
    best_cost, best_combo = float("inf"), None
    for combo in itertools.product(*(range(len(lv)) for lv in levels)):
        total = 0.0
        for lv, i in zip(levels, combo):
            total += lv[i]
        cost = abs(y - total)
        if cost < best_cost:
            best_cost, best_combo = cost, combo
    return best_cost, best_combo


def ps(values):
    return PowerSeries.regular(0, 10, values)


def run_co(y, levels):
    st_ = StateTable(levels)
    out = co_disaggregate(ps(np.atleast_1d(np.asarray(y, dtype=float))), st_)
    return {k: v.values.tolist() for k, v in out.items()}


def test_pair_recovered():
    assert run_co(160, {"A": (0, 100), "B": (0, 60)}) == {"A": [100], "B": [60]}


def test_zero_aggregate_all_off():
    assert run_co(0, {"A": (0, 100), "B": (0, 60)}) == {"A": [0], "B": [0]}


def test_tie_break_lexicographic():
    # (0, 1) precedes (1, 0): A stays OFF, B takes the 100 W
    assert run_co(100, {"A": (0, 100), "B": (0, 100)}) == {"A": [0], "B": [100]}


def test_equidistant_tie():
    # 50 is 50 W from both 0 (combo (0,0)) and 100 (combo (0,1)): (0,0) wins
    assert run_co(50, {"A": (0, 100), "B": (0, 100)}) == {"A": [0], "B": [0]}


def test_search_space_bound():
    levels = {f"a{i}": (0, 1, 2, 3) for i in range(10)}
    with pytest.raises(SearchSpaceTooLarge):
        run_co(1, levels)


level_tables = st.lists(
    st.lists(st.integers(1, 3000), min_size=0, max_size=3, unique=True).map(lambda v: (0, *sorted(v))),
    min_size=1,
    max_size=3,
)


@settings(max_examples=100, deadline=None)
@given(level_tables, st.lists(st.floats(0, 8000, allow_nan=False), min_size=1, max_size=30))
def test_matches_brute_force(tables, ys):
    levels = {f"a{i}": tuple(float(v) for v in t) for i, t in enumerate(tables)}
    st_ = StateTable(levels)
    combos, costs = best_combinations(np.array(ys), st_)
    for y, combo, cost in zip(ys, combos, costs):
        ref_cost, ref_combo = brute_force(y, list(levels.values()))
        assert cost == ref_cost
        assert tuple(combo) == ref_combo


def test_fit_two_level():
    x = np.tile([0.0, 1500.0], 50)
    ds = HouseholdDataset(ps(x), {"a": ps(x)})
    assert fit_states(ds).levels == {"a": (0.0, 1500.0)}


def test_fit_multistate_from_synthetic():
    m = ApplianceModel("wm", Kind.MULTISTATE, (0, 1800, 70), on_duration=200, off_duration=600, jitter=4)
    ds = synth.generate([m], synth.NoiseSpec(0.0), 20_000, seed=3)
    lv = fit_states(ds, k_max=3).levels["wm"]
    assert len(lv) == 3
    assert lv[0] == 0
    assert abs(lv[1] - 70) <= 5 and abs(lv[2] - 1800) <= 5


def test_fit_flat_zero_warns(caplog):
    ds = HouseholdDataset(ps(np.zeros(10)), {"a": ps(np.zeros(10))})
    assert fit_states(ds).levels == {"a": (0.0,)}
    assert "never exceeds" in caplog.text


def test_fit_respects_k_max():
    x = np.repeat([0.0, 100, 200, 400, 800, 1600], 10)
    ds = HouseholdDataset(ps(x), {"a": ps(x)})
    for k in (2, 3, 4):
        assert len(fit_states(ds, k_max=k).levels["a"]) == k


def test_kmeans_deterministic():
    x = np.random.default_rng(0).normal(500, 50, 1000)
    assert np.array_equal(kmeans_1d(x, 3), kmeans_1d(x[::-1], 3))


def test_unique_subset_sums_recovered_exactly():
    # levels are powers of two scaled, so every combination sum is distinct
    models = [
        ApplianceModel("a", Kind.ONOFF, (0, 100), 30, 70),
        ApplianceModel("b", Kind.CYCLIC, (0, 200), 25, 40),
        ApplianceModel("c", Kind.MULTISTATE, (0, 1600, 400), 60, 300),
    ]
    ds = synth.generate(models, synth.NoiseSpec(0.0), 5000, seed=11)
    states = fit_states(ds, k_max=4)
    est = co_disaggregate(ds.mains, states)
    for name in ds.names:
        assert mae(est[name], ds.appliances[name]) == 0.0


def test_output_independent_of_slot_order():
    levels = {"A": (0.0, 90.0, 200.0), "B": (0.0, 1500.0)}
    y = np.random.default_rng(1).uniform(0, 2000, 200)
    fwd = run_co(y, levels)
    rev = run_co(y[::-1], levels)
    for k in levels:
        assert fwd[k] == rev[k][::-1]
