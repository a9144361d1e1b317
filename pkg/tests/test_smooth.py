from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forecastaudit.model import DomainError, TruthSeries
from forecastaudit.smooth import SmootherConfig, geo_smooth, smooth_then_difference, sweep

DAYS = [date(2020, 3, 1) + timedelta(days=i) for i in range(200)]


def series(cum):
    return TruthSeries.from_cumulative("NY", DAYS[: len(cum)], cum)


@pytest.mark.parametrize("cfg", [SmootherConfig(), SmootherConfig(3, 1),
                                 SmootherConfig(5, 7, "shift-by-one"), SmootherConfig(1, 2)])
def test_constant_is_fixed_point(cfg):
    assert geo_smooth([7, 7, 7, 7], cfg).tolist() == [7.0, 7.0, 7.0, 7.0]


@given(st.floats(0, 1e9, allow_nan=False), st.integers(1, 40), st.integers(1, 15))
def test_constant_fixed_point_exact_property(c, n, reps):
    out = geo_smooth([c] * n, SmootherConfig(3, reps))
    assert (out == c).all()


def test_single_pass_examples():
    out = geo_smooth([1, 8, 64], SmootherConfig(3, 1))
    # hand values: sqrt(1*8), cbrt(1*8*64), sqrt(8*64)
    assert out == pytest.approx([8 ** 0.5, 8.0, 512 ** 0.5])
    assert out[0] == pytest.approx(2.828, abs=1e-3) and out[2] == pytest.approx(22.627, abs=1e-3)
    out = geo_smooth([0, 0, 5, 10], SmootherConfig(3, 1))
    assert out[:3].tolist() == [0, 0, 0]
    assert out[3] == pytest.approx(50 ** 0.5)


def test_errors():
    with pytest.raises(DomainError):
        geo_smooth([1, -1, 2])
    with pytest.raises(DomainError):
        geo_smooth([])
    with pytest.raises(DomainError):
        SmootherConfig(window=4)
    with pytest.raises(DomainError):
        SmootherConfig(repetitions=0)
    with pytest.raises(DomainError, match="anomaly"):
        smooth_then_difference(series([0, 5, 3]))


def test_smooth_then_difference_examples():
    assert (smooth_then_difference(series([0, 0, 1, 8, 64])) >= 0).all()
    assert smooth_then_difference(series([5, 5, 5])).tolist() == [5, 0, 0]


monotone = st.lists(st.integers(0, 500), min_size=1, max_size=60).map(np.cumsum)


@settings(max_examples=1000, deadline=None)
@given(monotone, st.integers(1, 12), st.sampled_from([1, 3, 5]),
       st.sampled_from(["propagate-zero", "shift-by-one"]))
def test_monotone_input_gives_nonnegative_daily(cum, reps, window, rule):
    daily = smooth_then_difference(series(cum.tolist()), SmootherConfig(window, reps, rule))
    assert (daily >= 0).all()


def step_support(reps, base, rule, n=61, s=30):
    cum = [base] * s + [base + 1] * (n - s)
    daily = smooth_then_difference(series(cum), SmootherConfig(3, reps, rule))
    daily[0] -= base  # first daily value carries the baseline level
    nz = np.flatnonzero(daily != 0)
    return nz.min() - s, nz.max() - s


@pytest.mark.parametrize("reps", range(1, 11))
def test_impulse_support_is_exactly_r(reps):
    assert step_support(reps, 5, "propagate-zero") == (-reps, reps)
    assert step_support(reps, 0, "shift-by-one") == (-reps, reps)
    lo, hi = step_support(reps, 0, "propagate-zero")
    assert -reps <= lo and hi <= reps


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=30), st.floats(0.01, 100),
       st.integers(1, 5))
def test_scaling_commutes(x, c, reps):
    cfg = SmootherConfig(3, reps)
    np.testing.assert_allclose(geo_smooth(np.array(x) * c, cfg), c * geo_smooth(x, cfg),
                               rtol=1e-9, atol=1e-300)


def test_half_width():
    assert SmootherConfig().half_width == 10
    assert SmootherConfig(5, 3).half_width == 6


def test_sweep_rows_and_skips():
    truth = {"NY": series([0, 1, 3, 6]),
             "NJ": TruthSeries.from_cumulative("NJ", DAYS[:3], [3, 2, 4])}
    rows, skipped = sweep(truth, windows=[3], repetitions=[1, 2])
    assert skipped == ["NJ"]
    assert len(rows) == 4 * 2 * 2
    assert rows[0][:5] == (3, 1, "propagate-zero", "NY", "2020-03-01")
