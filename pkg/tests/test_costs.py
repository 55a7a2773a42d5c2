import pytest
from hypothesis import given, settings, strategies as st

from splitmc.costs import (
    MB,
    PriceSheet,
    TimingBreakdown,
    estimate_cost,
    extrapolate_serial,
    measure_task_time,
    physical_cores,
    speedup,
    storage_cost_row,
)
from splitmc.errors import ConfigError


def breakdown(total_ms, workers=1):
    return TimingBreakdown.from_phases(0.0, total_ms, 0.0, 1, workers)


def test_extrapolate_serial():
    assert extrapolate_serial(100, 10) == 1000
    assert extrapolate_serial(3.5, 1) == 3.5
    with pytest.raises(ValueError):
        extrapolate_serial(0, 10)


def test_speedup():
    assert speedup(1900, 100) == 19.0
    assert speedup(42.0, 42.0) == 1.0
    with pytest.raises(ValueError):
        speedup(1, 0)


def test_timing_total():
    t = TimingBreakdown.from_phases(1.0, 20.0, 2.0, 4, 2)
    assert t.total_ms == 23.0
    assert t.to_dict()["n_workers"] == 2


def test_zero_prices():
    assert estimate_cost(breakdown(5e6, 19), 10 * MB, 5 * MB, PriceSheet()) == 0


def test_one_hour_one_worker():
    assert estimate_cost(breakdown(3.6e6), 0, 0, PriceSheet(vm_hour_price=0.12)) == 0.12


def test_hourly_ceiling_vs_fractional():
    b = breakdown(1.8e6, 2)  # half an hour
    assert estimate_cost(b, 0, 0, PriceSheet(vm_hour_price=1.0)) == 2.0
    assert estimate_cost(b, 0, 0, PriceSheet(vm_hour_price=1.0, billing="fractional")) == 1.0


def test_storage_and_egress_terms():
    p = PriceSheet(storage_price=0.5, egress_price=0.25)
    assert estimate_cost(breakdown(0.0), 4 * MB, 2 * MB, p) == pytest.approx(2.5)


def test_table_row():
    row = storage_cost_row(1024, breakdown(10.0), 2 * MB, 0, PriceSheet(vm_hour_price=1.0))
    assert row == {"n_mc": 1024, "space_mb": 2.0, "cost": 1.0}


def test_price_validation():
    with pytest.raises(ConfigError):
        PriceSheet(vm_hour_price=-1)
    with pytest.raises(ConfigError):
        PriceSheet(billing="per-minute")


def test_measure_task_time():
    calls = []
    ms = measure_task_time(lambda: calls.append(1), repetitions=10)
    assert len(calls) == 10 and ms >= 0


def test_physical_cores():
    assert physical_cores() >= 1


pos = st.floats(0, 1e9, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(pos.filter(lambda x: x > 1e-6), pos.filter(lambda x: x > 1e-6), st.floats(1e-3, 1e3))
def test_speedup_scale_invariant(serial, total, alpha):
    assert speedup(alpha * serial, alpha * total) == pytest.approx(speedup(serial, total), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e8), st.integers(1, 100), pos, pos, st.floats(0, 10), st.floats(0, 1),
       st.floats(0, 1), st.sampled_from(["hourly", "fractional"]), st.integers(0, 6),
       st.floats(0, 10))
def test_cost_monotone(total, workers, stored, egress, vm, sp, ep, billing, which, bump):
    p = PriceSheet(vm, sp, ep, billing=billing)
    args = [total, workers, stored, egress, vm, sp, ep]
    args2 = list(args)
    args2[which] = args2[which] + (int(bump) if which == 1 else bump)

    def cost(a):
        return estimate_cost(breakdown(a[0], a[1]), a[2], a[3],
                             PriceSheet(a[4], a[5], a[6], billing=p.billing))

    assert cost(args2) >= cost(args) - 1e-9 * max(1.0, cost(args))
