import statistics

import pytest
from scipy.stats import norm

from forecastaudit.ingest import align
from forecastaudit.metrics import coverage_table, lape, percentage_error
from forecastaudit.model import DomainError
from forecastaudit.synth import SyntheticScenario, build, generate, write_scenario


def inside_share(truth, archive, k=1):
    recs = list(align(archive, truth, k))
    return sum(r.coverage.value == "inside" for r in recs) / len(recs), recs


def test_determinism_byte_for_byte(tmp_path):
    a, b = build(SyntheticScenario(seed=3)), build(SyntheticScenario(seed=3))
    assert a.truth_csv == b.truth_csv and a.forecast_csvs == b.forecast_csvs
    assert build(SyntheticScenario(seed=4)).truth_csv != a.truth_csv
    m1 = write_scenario(SyntheticScenario(seed=3), tmp_path / "a")
    m2 = write_scenario(SyntheticScenario(seed=3), tmp_path / "b")
    for p in sorted((tmp_path / "a").rglob("*.*")):
        assert p.read_bytes() == (m2.parent / p.relative_to(m1.parent)).read_bytes()


def test_calibrated_coverage():
    share, recs = inside_share(*generate(SyntheticScenario()))
    assert len(recs) >= 1900
    assert 0.93 <= share <= 0.97


def test_overconfident_coverage():
    expected = 2 * norm.cdf(norm.ppf(0.975) * 0.5) - 1  # about 0.673
    assert expected < 0.8
    share, _ = inside_share(*generate(SyntheticScenario(calibration="overconfident", shrink=0.5)))
    assert share <= 0.80
    assert share == pytest.approx(expected, abs=0.04)


def test_biased_direction():
    truth, archive = generate(SyntheticScenario(calibration="biased", shift=2.0))
    recs = list(align(archive, truth, 1))
    rows = coverage_table(recs)
    below = sum(r.below for r in rows) / sum(r.n for r in rows)
    above = sum(r.above for r in rows) / sum(r.n for r in rows)
    assert below < 0.005 and above > 0.4
    assert statistics.median(percentage_error(r.actual, r.point) for r in recs) > 0


def test_day_varying_bias_flips_asymmetry():
    sc = SyntheticScenario(calibration="biased", shift=(2.5, -2.5), days=20)
    truth, archive = generate(sc)
    for row in coverage_table(align(archive, truth, 1)):
        idx = (row.target_date - sc.start).days
        if sc.shift_on(idx) > 0:
            assert row.above > row.below
        else:
            assert row.below > row.above


def test_lape_median_falls_with_noise():
    medians = []
    for noise in (20.0, 5.0, 0.5):
        truth, archive = generate(SyntheticScenario(noise_scale=noise, baseline=500))
        medians.append(statistics.median(
            lape(r.actual, r.point, "fraction") for r in align(archive, truth, 1)))
    assert medians[0] > medians[1] > medians[2] >= 0.5


def test_all_horizons_populated():
    truth, archive = generate(SyntheticScenario(days=10, locations=3))
    for k in range(1, 5):
        assert len(align(archive, truth, k)) == 3 * (10 - k)


@pytest.mark.parametrize("kw", [{"noise_scale": 0}, {"noise_scale": -1}, {"days": 1},
                                {"locations": 0}, {"calibration": "overconfident", "shrink": 1.5}])
def test_invalid_scenarios(kw):
    with pytest.raises(DomainError):
        SyntheticScenario(**kw)
