"""Synthetic truth and forecasters whose interval calibration is known by
construction. Output is serialized to the canonical CSV formats and parsed
back, so the oracle exercises ingestion as well as the metrics."""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy.stats import norm

from .ingest import SnapshotArchive, parse_snapshot, parse_truth, write_snapshot, write_truth
from .model import DomainError, ForecastEntry, ForecastSnapshot, TruthSeries

Calibration = Literal["calibrated", "overconfident", "biased"]

# Two-letter codes for the 50 states plus DC, then territories for larger runs.
LOCATIONS = (
    "AK AL AR AZ CA CO CT DC DE FL GA HI IA ID IL IN KS KY LA MA MD ME MI MN MO MS "
    "MT NC ND NE NH NJ NM NV NY OH OK OR PA RI SC SD TN TX UT VA VT WA WI WV WY "
    "AS GU MP PR VI"
).split()

Z_975 = float(norm.ppf(0.975))


@dataclass(frozen=True)
class SyntheticScenario:
    """Parameters of a synthetic evaluation.

    ``shift`` moves actuals relative to the forecaster in units of the noise
    standard deviation; a sequence gives one shift per target day (indexed from
    ``start``). ``shrink`` scales interval half-widths for the overconfident
    forecaster.
    """

    seed: int = 0
    locations: int = 51
    days: int = 40
    trend: Literal["flat", "bell-curve"] = "bell-curve"
    amplitude: float = 100.0
    baseline: float = 50.0
    noise_scale: float = 5.0
    calibration: Calibration = "calibrated"
    shrink: float = 0.5
    shift: float | Sequence[float] = 2.0
    max_horizon: int = 4
    snapshot_every: int = 1
    start: date = date(2020, 3, 1)
    model_tag: str = "synthetic"

    def __post_init__(self) -> None:
        if self.noise_scale <= 0:
            raise DomainError(f"noise_scale must be positive, got {self.noise_scale}")
        if not 1 <= self.locations <= len(LOCATIONS) * 26:
            raise DomainError(f"locations out of range: {self.locations}")
        if self.days < 2:
            raise DomainError(f"days must be at least 2, got {self.days}")
        if self.calibration not in ("calibrated", "overconfident", "biased"):
            raise DomainError(f"unknown calibration {self.calibration!r}")
        if self.calibration == "overconfident" and not 0 < self.shrink < 1:
            raise DomainError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.max_horizon < 1 or self.snapshot_every < 1:
            raise DomainError("max_horizon and snapshot_every must be positive")

    def location_codes(self) -> list[str]:
        if self.locations <= len(LOCATIONS):
            return LOCATIONS[: self.locations]
        extra = [f"X{chr(65 + i // 26)}{chr(65 + i % 26)}"
                 for i in range(self.locations - len(LOCATIONS))]
        return LOCATIONS + extra

    def shift_on(self, day_index: int) -> float:
        if self.calibration != "biased":
            return 0.0
        if isinstance(self.shift, (int, float)):
            return float(self.shift)
        return float(self.shift[day_index % len(self.shift)])

    def expected_inside(self) -> float:
        """Probability an actual lands inside its interval, ignoring rounding."""
        half = Z_975 * (self.shrink if self.calibration == "overconfident" else 1.0)
        if self.calibration == "biased" and isinstance(self.shift, (int, float)):
            s = float(self.shift)
            return float(norm.cdf(half - s) - norm.cdf(-half - s))
        return float(norm.cdf(half) - norm.cdf(-half))


@dataclass
class SyntheticData:
    truth_csv: str
    forecast_csvs: dict[date, str]
    scenario: SyntheticScenario
    truth: dict[str, TruthSeries] = field(default_factory=dict)
    archive: SnapshotArchive = field(default_factory=SnapshotArchive)


def _trend(s: SyntheticScenario, scale: np.ndarray) -> np.ndarray:
    t = np.arange(s.days, dtype=float)
    if s.trend == "flat":
        shape = np.ones_like(t)
    elif s.trend == "bell-curve":
        mid, width = (s.days - 1) / 2.0, max(s.days / 6.0, 1.0)
        shape = np.exp(-0.5 * ((t - mid) / width) ** 2)
    else:
        raise DomainError(f"unknown trend {s.trend!r}")
    return s.baseline + s.amplitude * scale[:, None] * shape[None, :]


def build(scenario: SyntheticScenario) -> SyntheticData:
    """Generate canonical CSV text for truth and every snapshot, then parse it."""
    s = scenario
    rng = np.random.default_rng(s.seed)
    codes = s.location_codes()
    scale = rng.uniform(0.5, 1.5, size=len(codes))
    trend = _trend(s, scale)
    shifts = np.array([s.shift_on(j) for j in range(s.days)])
    noise = rng.standard_normal(trend.shape)
    daily = np.maximum(np.rint(trend + s.noise_scale * (noise + shifts[None, :])), 0).astype(int)
    dates = [s.start + timedelta(days=j) for j in range(s.days)]

    truth = {loc: TruthSeries.from_daily(loc, dates, daily[i]) for i, loc in enumerate(codes)}
    buf = io.StringIO()
    write_truth(truth, buf, "cumulative")
    truth_csv = buf.getvalue()

    half = Z_975 * s.noise_scale * (s.shrink if s.calibration == "overconfident" else 1.0)
    forecast_csvs = {}
    for r in range(0, s.days - 1, s.snapshot_every):
        entries = []
        for i, loc in enumerate(codes):
            for k in range(1, s.max_horizon + 1):
                j = r + k
                if j >= s.days:
                    break
                point = float(trend[i, j])
                entries.append(ForecastEntry(loc, dates[j], point, max(point - half, 0.0),
                                             point + half))
        snap = ForecastSnapshot(dates[r], s.model_tag, tuple(entries))
        buf = io.StringIO()
        write_snapshot(snap, buf)
        forecast_csvs[dates[r]] = buf.getvalue()

    data = SyntheticData(truth_csv, forecast_csvs, s)
    data.truth = parse_truth(truth_csv.encode(), "cumulative")
    data.archive = SnapshotArchive.from_snapshots(
        parse_snapshot(text.encode(), r, s.model_tag, strict=True)
        for r, text in forecast_csvs.items())
    return data


def generate(scenario: SyntheticScenario) -> tuple[dict[str, TruthSeries], SnapshotArchive]:
    data = build(scenario)
    return data.truth, data.archive


def write_scenario(scenario: SyntheticScenario, directory: str | Path) -> Path:
    """Write truth.csv, forecasts/<release>.csv and manifest.json; returns the manifest."""
    directory = Path(directory)
    data = build(scenario)
    (directory / "forecasts").mkdir(parents=True, exist_ok=True)
    (directory / "truth.csv").write_text(data.truth_csv, encoding="utf-8")
    items = []
    for r, text in data.forecast_csvs.items():
        rel = f"forecasts/{r.isoformat()}.csv"
        (directory / rel).write_text(text, encoding="utf-8")
        items.append({"path": rel, "release_date": r.isoformat(), "model_tag": scenario.model_tag})
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(items, indent=2) + "\n", encoding="utf-8")
    params = asdict(scenario)
    params["start"] = scenario.start.isoformat()
    if not isinstance(scenario.shift, (int, float)):
        params["shift"] = list(scenario.shift)
    (directory / "scenario.json").write_text(json.dumps(params, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    return manifest

