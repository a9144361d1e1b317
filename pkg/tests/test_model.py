from datetime import date

import pytest
from hypothesis import given, strategies as st

from forecastaudit.model import (
    AlignedPrediction,
    CoverageClass,
    DomainError,
    ForecastEntry,
    ForecastSnapshot,
    TruthSeries,
    classify,
    horizon,
)


@pytest.mark.parametrize("release, target, k", [
    (date(2020, 3, 29), date(2020, 3, 30), 1),
    (date(2020, 3, 29), date(2020, 3, 31), 2),
    (date(2020, 4, 1), date(2020, 4, 5), 4),
])
def test_horizon(release, target, k):
    assert horizon(release, target) == k


@pytest.mark.parametrize("target", [date(2020, 3, 29), date(2020, 3, 28)])
def test_horizon_rejects_non_future(target):
    with pytest.raises(DomainError):
        horizon(date(2020, 3, 29), target)


@pytest.mark.parametrize("actual, cls", [
    (5, CoverageClass.INSIDE),
    (2, CoverageClass.BELOW),
    (3, CoverageClass.INSIDE),
    (10, CoverageClass.INSIDE),
    (11, CoverageClass.ABOVE),
])
def test_classify(actual, cls):
    assert classify(actual, 3.0, 10.0) is cls


def test_classify_rejects_inverted_bounds():
    with pytest.raises(DomainError):
        classify(1, 5.0, 4.0)


bounds = st.tuples(st.floats(0, 1e6), st.floats(0, 1e6)).map(sorted)


@given(st.integers(-10, 10**6), bounds)
def test_classification_is_total_and_exclusive(actual, b):
    lower, upper = b
    cls = classify(actual, lower, upper)
    hits = [actual < lower, lower <= actual <= upper, actual > upper]
    assert sum(hits) == 1
    assert cls is [CoverageClass.BELOW, CoverageClass.INSIDE, CoverageClass.ABOVE][hits.index(True)]


@given(st.integers(0, 1000), st.integers(0, 1000), bounds)
def test_classification_monotone_in_actual(a, b, bnd):
    order = [CoverageClass.BELOW, CoverageClass.INSIDE, CoverageClass.ABOVE]
    lo, hi = sorted((a, b))
    assert order.index(classify(lo, *bnd)) <= order.index(classify(hi, *bnd))


def test_forecast_entry_validation():
    ForecastEntry("NY", date(2020, 3, 30), 50.1, 30.0, 80.2)
    with pytest.raises(DomainError):
        ForecastEntry("NJ", date(2020, 3, 30), 10.0, 20.0, 30.0)
    with pytest.raises(DomainError):
        ForecastEntry("NJ", date(2020, 3, 30), float("nan"), 0.0, 1.0)
    with pytest.raises(DomainError):
        ForecastEntry("NJ", date(2020, 3, 30), -1.0, -2.0, 1.0)


def test_snapshot_rejects_duplicates_and_past_entries():
    e = ForecastEntry("NY", date(2020, 3, 30), 1.0, 0.0, 2.0)
    with pytest.raises(DomainError):
        ForecastSnapshot(date(2020, 3, 29), "x", (e, e))
    with pytest.raises(DomainError):
        ForecastSnapshot(date(2020, 3, 30), "x", (e,))


def test_truth_series_invariants():
    days = (date(2020, 3, 1), date(2020, 3, 2))
    s = TruthSeries.from_cumulative("NY", days, [10, 8])
    assert s.daily == (10, -2)
    assert s.anomaly == (False, True)
    with pytest.raises(DomainError):
        TruthSeries.from_cumulative("NY", days[::-1], [1, 2])
    with pytest.raises(DomainError):
        TruthSeries("NY", days, (1, 2), (1, 1), (False, True))


def test_aligned_prediction_checks_horizon():
    with pytest.raises(DomainError):
        AlignedPrediction("NY", date(2020, 3, 29), date(2020, 3, 31), 1, 1.0, 0.0, 2.0, 1)
