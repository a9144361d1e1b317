from forecastaudit.adapters import convert_ihme, convert_jhu
from forecastaudit.ingest import parse_snapshot, parse_truth

from conftest import d


def test_ihme_to_canonical(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("location_name,date,deaths_mean,deaths_lower,deaths_upper,allbed_mean\n"
                   "New York,2020-03-31,300.5,200.0,400.0,1\n"
                   "Ontario,2020-03-31,1,0,2,1\n"
                   "Alabama,2020-03-28,1,0,2,1\n")
    out = tmp_path / "snap.csv"
    assert convert_ihme(raw, out) == 2
    snap = parse_snapshot(out, d("2020-03-29"))
    assert [e.location for e in snap.entries] == ["NY"]
    assert snap.provenance.dropped_past == 1


def test_jhu_sums_counties(tmp_path):
    raw = tmp_path / "jhu.csv"
    raw.write_text("UID,Province_State,Admin2,Population,3/30/20,3/31/20\n"
                   "1,New York,Kings,100,10,12\n"
                   "2,New York,Queens,100,5,9\n"
                   "3,Diamond Princess,,0,1,1\n")
    out = tmp_path / "truth.csv"
    assert convert_jhu(raw, out) == 2
    ny = parse_truth(out, "cumulative")["NY"]
    assert list(ny.cumulative) == [15, 21] and list(ny.daily) == [15, 6]
