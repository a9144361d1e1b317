import math
from datetime import date

import pytest
from hypothesis import given, strategies as st

from forecastaudit.metrics import (
    CoverageRow,
    DegeneratePeakError,
    coverage_table,
    heatmap_values,
    lape,
    peak_range,
    percentage_error,
    round_half_away,
)
from forecastaudit.model import (
    AlignedPrediction,
    CoverageClass,
    DomainError,
    ForecastEntry,
    ForecastSnapshot,
)

R, T = date(2020, 3, 29), date(2020, 3, 30)


def rec(loc, actual, point, lower=None, upper=None, k=1):
    lower = point if lower is None else lower
    upper = point if upper is None else upper
    return AlignedPrediction(loc, date.fromordinal(T.toordinal() - k), T, k, point, lower,
                             upper, actual)


@pytest.mark.parametrize("actual, point, expected", [
    (0, 0.0, 0.0),
    (0, 7.0, None),
    (100, 80.0, 20.0),
    (10, 14.0, -40.0),
    (12, 12.0, 0.0),
    (20, 10.0, 50.0),
])
def test_percentage_error(actual, point, expected):
    pe = percentage_error(actual, point)
    assert pe == (None if expected is None else pytest.approx(expected))


def test_lape_examples():
    assert lape(0, 0.0) == 0.5
    assert lape(50, 50.0) == 0.5
    # hand evaluation: 1 / (1 + e^-1)
    assert lape(100, 99.0) == pytest.approx(0.7310585786, abs=1e-9)
    assert abs(lape(100, 99.0) - 0.731) <= 0.001
    assert lape(0, 5.0) == 1.0


def test_lape_fraction_units():
    # 10% error in fraction units sits at sigmoid(0.1)
    assert lape(100, 90.0, "fraction") == pytest.approx(1 / (1 + math.exp(-0.1)))
    assert lape(100, 90.0, "percent") == pytest.approx(1 / (1 + math.exp(-10)))


@given(st.integers(0, 10**6), st.one_of(st.integers(0, 10**6).map(float),
                                         st.floats(0, 1e7, allow_nan=False)),
       st.sampled_from(["percent", "fraction"]))
def test_lape_range(actual, point, units):
    assert 0.5 <= lape(actual, point, units) <= 1.0


@given(st.integers(1, 10**5), st.floats(0, 1e5))
def test_lape_symmetric_in_absolute_error(actual, delta):
    hi = lape(actual, actual + delta)
    lo = lape(actual, max(actual - delta, 0.0)) if delta <= actual else None
    if lo is not None:
        assert hi == pytest.approx(lo)


def test_lape_symmetry_example():
    assert lape(100, 80.0) == lape(100, 120.0)


@given(st.integers(1, 10**4), st.floats(0, 1e4), st.floats(0, 1e4))
def test_lape_monotone(actual, d1, d2):
    a, b = sorted((d1, d2))
    assert lape(actual, actual + a) <= lape(actual, actual + b)


@given(st.integers(0, 10**4), st.floats(0, 1e4), st.floats(0, 1e4))
def test_pe_sign_matches_coverage(actual, p1, p2):
    point, upper = sorted((p1, p2))
    pe = percentage_error(actual, point)
    if actual > 0:
        assert (pe > 0) == (actual > point)
    cls = rec("NY", actual, point, point, upper).coverage
    if cls is CoverageClass.ABOVE and actual > 0:
        assert pe > 0


def test_coverage_table_all_inside():
    rows = coverage_table([rec(l, 5, 5.0, 1.0, 9.0) for l in ("NY", "NJ", "CA")])
    assert [r.cell() for r in rows] == ["100(0,0)"]
    assert rows[0].n == 3


def test_coverage_table_mixed():
    recs = [rec("A", 5, 5.0, 1.0, 9.0), rec("B", 5, 5.0, 1.0, 9.0),
            rec("C", 0, 5.0, 1.0, 9.0), rec("D", 10, 5.0, 1.0, 9.0)]
    (row,) = coverage_table(recs)
    assert row.cell() == "50(25,25)"
    assert (row.inside, row.below, row.above) == (2, 1, 1)


def test_coverage_table_groups_and_empty():
    assert coverage_table([]) == []
    rows = coverage_table([rec("A", 5, 5.0, 1.0, 9.0, k=1), rec("A", 5, 5.0, 1.0, 9.0, k=2)])
    assert [(r.target_date, r.horizon_k) for r in rows] == [(T, 1), (T, 2)]


@given(st.lists(st.sampled_from(["in", "lo", "hi"]), min_size=1, max_size=60), st.randoms())
def test_coverage_rounding_and_permutation(kinds, rnd):
    value = {"in": 5, "lo": 0, "hi": 10}
    recs = [rec(f"L{i}", value[k], 5.0, 1.0, 9.0) for i, k in enumerate(kinds)]
    (row,) = coverage_table(recs)
    assert abs(sum(row.rounded()) - 100) <= 1
    assert row.inside_pct + row.below_pct + row.above_pct == 100
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    assert coverage_table(shuffled) == [row]


def test_round_half_away():
    assert round_half_away(2.5) == 3
    assert round_half_away(-2.5) == -3
    from fractions import Fraction
    assert round_half_away(Fraction(100, 8)) == 13


def test_coverage_row_validation():
    with pytest.raises(DomainError):
        CoverageRow(T, 1, 0, 0, 0, 0)


def snapshot_of(points):
    entries = tuple(ForecastEntry("NY", date(2020, 4, i + 1), p, lo, hi)
                    for i, (p, lo, hi) in enumerate(points))
    return ForecastSnapshot(date(2020, 3, 31), "revised", entries)


def test_peak_range_examples():
    s = peak_range(snapshot_of([(10, 5, 20), (100, 60, 180), (40, 20, 90)]), "NY")
    assert s.ratio == pytest.approx(1.2)
    assert s.peak_date == date(2020, 4, 2)
    tie = peak_range(snapshot_of([(50, 40, 70), (50, 30, 90)]), "NY")
    assert tie.peak_date == date(2020, 4, 1)
    assert tie.ratio == pytest.approx(0.6)
    with pytest.raises(DegeneratePeakError):
        peak_range(snapshot_of([(0, 0, 3), (0, 0, 1)]), "NY")
    with pytest.raises(KeyError):
        peak_range(snapshot_of([(1, 0, 3)]), "NJ")


@given(st.floats(0.01, 1e3))
def test_peak_ratio_scale_invariant(c):
    pts = [(10, 5, 20), (100, 60, 180), (40, 20, 90)]
    base = peak_range(snapshot_of(pts), "NY").ratio
    scaled = peak_range(snapshot_of([tuple(c * v for v in p) for p in pts]), "NY").ratio
    assert scaled == pytest.approx(base, rel=1e-9)


def test_heatmap_values():
    cells = heatmap_values([rec("NY", 10, 14.0, 8.0, 20.0), rec("NJ", 0, 3.0, 0.0, 5.0),
                            rec("CA", 12, 12.0, 10.0, 14.0), rec("TX", 20, 10.0, 5.0, 12.0)])
    assert cells["NY"].pe == pytest.approx(-40.0) and cells["NY"].color == "blue"
    assert cells["NJ"].pe is None and cells["NJ"].color == "gray"
    assert cells["CA"].pe == 0.0
    assert cells["TX"].pe == pytest.approx(50.0) and cells["TX"].color == "red"
    assert cells["TX"].coverage is CoverageClass.ABOVE
    with pytest.raises(DomainError):
        heatmap_values([rec("NY", 1, 1.0), rec("NY", 2, 1.0)])
