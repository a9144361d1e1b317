"""Converters from the raw public release layouts to the canonical CSVs.

IHME snapshot files carry one row per location and date with columns
``location_name`` (or ``location``), ``date`` and ``deaths_mean``,
``deaths_lower``, ``deaths_upper``. The JHU US deaths time series is wide:
one row per county, ``Province_State`` naming the state and one column per
``M/D/YY`` date holding cumulative deaths.

Usage::

    python3 -m forecastaudit.adapters ihme RAW.csv OUT.csv
    python3 -m forecastaudit.adapters jhu time_series_covid19_deaths_US.csv truth.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from datetime import datetime
from pathlib import Path

STATE_CODES = {
    "Alabama": "AL", "Alaska": "AK", "Arizona": "AZ", "Arkansas": "AR", "California": "CA",
    "Colorado": "CO", "Connecticut": "CT", "Delaware": "DE", "District of Columbia": "DC",
    "Florida": "FL", "Georgia": "GA", "Hawaii": "HI", "Idaho": "ID", "Illinois": "IL",
    "Indiana": "IN", "Iowa": "IA", "Kansas": "KS", "Kentucky": "KY", "Louisiana": "LA",
    "Maine": "ME", "Maryland": "MD", "Massachusetts": "MA", "Michigan": "MI", "Minnesota": "MN",
    "Mississippi": "MS", "Missouri": "MO", "Montana": "MT", "Nebraska": "NE", "Nevada": "NV",
    "New Hampshire": "NH", "New Jersey": "NJ", "New Mexico": "NM", "New York": "NY",
    "North Carolina": "NC", "North Dakota": "ND", "Ohio": "OH", "Oklahoma": "OK", "Oregon": "OR",
    "Pennsylvania": "PA", "Rhode Island": "RI", "South Carolina": "SC", "South Dakota": "SD",
    "Tennessee": "TN", "Texas": "TX", "Utah": "UT", "Vermont": "VT", "Virginia": "VA",
    "Washington": "WA", "West Virginia": "WV", "Wisconsin": "WI", "Wyoming": "WY",
    "Puerto Rico": "PR",
}


def _write(rows, header, out: Path) -> int:
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return len(rows)


def convert_ihme(raw: Path, out: Path) -> int:
    """Keep rows for known states; returns the number written."""
    rows = []
    with open(raw, encoding="utf-8-sig", newline="") as fh:
        for row in csv.DictReader(fh):
            name = row.get("location_name") or row.get("location") or ""
            code = STATE_CODES.get(name.strip())
            if code is None:
                continue
            day = (row.get("date") or row.get("date_reported") or "").strip()[:10]
            rows.append((code, day, row["deaths_mean"], row["deaths_lower"], row["deaths_upper"]))
    rows.sort()
    return _write(rows, ("location", "target_date", "point", "lower", "upper"), out)


def convert_jhu(raw: Path, out: Path) -> int:
    """Sum county cumulative deaths by state; returns the number of rows written."""
    totals: dict[tuple[str, str], int] = defaultdict(int)
    with open(raw, encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        date_cols = []
        for col in reader.fieldnames or []:
            try:
                date_cols.append((col, datetime.strptime(col, "%m/%d/%y").date().isoformat()))
            except ValueError:
                pass
        for row in reader:
            code = STATE_CODES.get(row.get("Province_State", "").strip())
            if code is None:
                continue
            for col, day in date_cols:
                totals[(code, day)] += int(float(row[col] or 0))
    rows = [(loc, day, n) for (loc, day), n in sorted(totals.items())]
    return _write(rows, ("location", "date", "count"), out)


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="python3 -m forecastaudit.adapters",
                                description="convert raw public files to canonical CSV")
    p.add_argument("kind", choices=("ihme", "jhu"))
    p.add_argument("raw", type=Path)
    p.add_argument("out", type=Path)
    args = p.parse_args(argv)
    n = (convert_ihme if args.kind == "ihme" else convert_jhu)(args.raw, args.out)
    print(f"{args.out}: {n} rows")
    return 0


if __name__ == "__main__":
    sys.exit(main())
