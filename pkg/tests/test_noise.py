import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nilmgap import synth
from nilmgap.errors import DegenerateAggregate, IncompatiblePowerTypes
from nilmgap.noise import compute_nar, denoise, residual
from nilmgap.timeseries import HouseholdDataset, PowerSeries, PowerType


def household(mains, apps, mains_type=PowerType.ACTIVE, app_type=PowerType.ACTIVE, label="h"):
    return HouseholdDataset(
        PowerSeries.regular(0, 10, mains, mains_type),
        {k: PowerSeries.regular(0, 10, v, app_type) for k, v in apps.items()},
        label,
    )


def test_residual_hand_values():
    ds = household([10, 10], {"a": [5, 4], "b": [3, 5]})
    assert residual(ds).values.tolist() == [2, 1]


def test_residual_zero_when_superposed():
    ds = household([7, 9, 0], {"a": [7, 4, 0], "b": [0, 5, 0]})
    assert residual(ds).values.tolist() == [0, 0, 0]


def test_power_type_mismatch():
    ds = household([10, 10], {"a": [5, 5]}, PowerType.ACTIVE, PowerType.APPARENT)
    with pytest.raises(IncompatiblePowerTypes):
        residual(ds)
    with pytest.raises(IncompatiblePowerTypes):
        compute_nar(ds)


def test_nar_hand_value():
    rep = compute_nar(household([10, 10], {"a": [8, 9]}))
    assert rep.nar == 3 / 20
    assert rep.total_residual == 3 and rep.total_aggregate_energy == 20 and rep.slots_used == 2


def test_nar_degenerate():
    with pytest.raises(DegenerateAggregate):
        compute_nar(household([0, 0], {"a": [0, 0]}))


def test_nar_skips_incomplete_slots():
    present = np.array([True, False, True])
    ds = HouseholdDataset(
        PowerSeries.regular(0, 10, [10, 1000, 10]),
        {"a": PowerSeries.regular(0, 10, [8, 0, 9], present=present)},
    )
    rep = compute_nar(ds)
    assert rep.nar == 3 / 20 and rep.slots_used == 2


def test_nar_of_synthetic_household():
    ds = synth.generate(synth.catalog_models(["fridge", "kettle"]), synth.NoiseSpec(0.651), 20_000, seed=2)
    assert abs(compute_nar(ds).nar - 0.651) < 1e-9


def test_denoise_single_appliance():
    ds = household([10, 12], {"a": [3, 4]})
    assert denoise(ds).mains.values.tolist() == [3, 4]


def test_denoise_removes_exactly_eta():
    ds = synth.generate(synth.catalog_models(["fridge", "kettle", "lamp"]), synth.NoiseSpec(0.3), 5000, seed=5)
    den = denoise(ds)
    eta = ds.mains.values - ds.appliance_sum()
    np.testing.assert_allclose(ds.mains.values - den.mains.values, eta, rtol=0, atol=1e-9)
    assert compute_nar(den).nar == 0.0


def test_denoise_sets_appliance_power_type():
    ds = household([10, 10], {"a": [5, 5]}, PowerType.APPARENT, PowerType.ACTIVE)
    den = denoise(ds)
    assert den.mains.power_type is PowerType.ACTIVE
    assert compute_nar(den).nar == 0.0


watts = arrays(np.float64, 12, elements=st.floats(0, 3000, allow_nan=False))


@settings(max_examples=60)
@given(watts, watts, watts, st.floats(0.01, 1000))
def test_nar_properties(x1, x2, extra, c):
    mains = x1 + x2 + extra
    if mains.sum() <= 0:
        return
    ds = household(mains, {"a": x1, "b": x2})
    nar = compute_nar(ds).nar
    assert 0 <= nar <= 1 + 1e-12
    scaled = household(mains * c, {"a": x1 * c, "b": x2 * c})
    assert compute_nar(scaled).nar == pytest.approx(nar, rel=1e-9, abs=1e-12)
    den = denoise(ds)
    assert denoise(den) == den
    if den.mains.values.sum() > 0:
        assert compute_nar(den).nar == 0.0
