"""Per-record and per-day accuracy and calibration metrics."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import date
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable, Literal, Optional

from .model import AlignedPrediction, CoverageClass, DomainError, ForecastSnapshot

ApeUnits = Literal["percent", "fraction"]

# Percentage error is undefined (reported as NA) when the actual count is zero
# but the prediction is not; ``None`` stands for NA throughout.
PEValue = Optional[float]


class DegeneratePeakError(DomainError):
    """The predicted trajectory never rises above zero."""


def round_half_away(x: Fraction | float) -> int:
    d = Decimal(x.numerator) / Decimal(x.denominator) if isinstance(x, Fraction) else Decimal(repr(x))
    return int(d.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def percentage_error(actual: int, point: float) -> PEValue:
    """(actual - point) / actual * 100; positive means the forecast was too low."""
    if actual == 0:
        return 0.0 if point == 0 else None
    return (actual - point) / actual * 100.0


def ape(actual: int, point: float, units: ApeUnits = "percent") -> float:
    """Absolute percentage error; ``inf`` when the actual is zero and the point is not."""
    if actual == 0:
        return 0.0 if point == 0 else math.inf
    x = abs(actual - point) / abs(actual)
    if units == "percent":
        return x * 100.0
    if units == "fraction":
        return x
    raise ValueError(f"unknown APE units {units!r}")


def lape(actual: int, point: float, units: ApeUnits = "percent") -> float:
    """Logistic transform of the absolute percentage error, in [0.5, 1].

    Perfect predictions map to 0.5 (including 0 predicted for 0 observed);
    a nonzero prediction for a zero count maps to the supremum 1.0.
    """
    x = ape(actual, point, units)
    if math.isinf(x):
        return 1.0
    return 1.0 / (1.0 + math.exp(-x))


@dataclass(frozen=True)
class CoverageRow:
    target_date: date
    horizon_k: int
    n: int
    inside: int
    below: int
    above: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.inside + self.below + self.above != self.n:
            raise DomainError("coverage counts must be positive and sum to n")

    def _pct(self, count: int) -> Fraction:
        return Fraction(100 * count, self.n)

    @property
    def inside_pct(self) -> Fraction:
        return self._pct(self.inside)

    @property
    def below_pct(self) -> Fraction:
        return self._pct(self.below)

    @property
    def above_pct(self) -> Fraction:
        return self._pct(self.above)

    def rounded(self) -> tuple[int, int, int]:
        return tuple(round_half_away(p) for p in (self.inside_pct, self.below_pct, self.above_pct))

    def cell(self) -> str:
        """Display form ``inside(below,above)`` with whole percentages."""
        i, b, a = self.rounded()
        return f"{i}({b},{a})"


def coverage_table(records: Iterable[AlignedPrediction]) -> list[CoverageRow]:
    """Group by (target date, horizon) and count interval outcomes."""
    groups: dict[tuple[date, int], Counter] = defaultdict(Counter)
    for r in records:
        groups[(r.target_date, r.horizon_k)][r.coverage] += 1
    rows = []
    for (day, k), c in sorted(groups.items()):
        rows.append(CoverageRow(day, k, sum(c.values()), c[CoverageClass.INSIDE],
                                c[CoverageClass.BELOW], c[CoverageClass.ABOVE]))
    return rows


@dataclass(frozen=True)
class PeakRangeStat:
    location: str
    release_date: date
    peak_date: date
    peak_point: float
    pi_range: float

    @property
    def ratio(self) -> float:
        return self.pi_range / self.peak_point


def peak_range(snapshot: ForecastSnapshot, location: str) -> PeakRangeStat:
    """Interval width at the predicted peak, relative to the peak value.

    Ties for the peak go to the earliest date.
    """
    traj = snapshot.trajectory(location)
    if not traj:
        raise KeyError(f"no entries for {location} in release {snapshot.release_date}")
    peak = traj[0]
    for e in traj[1:]:
        if e.point > peak.point:
            peak = e
    if peak.point <= 0:
        raise DegeneratePeakError(
            f"{location} release {snapshot.release_date}: predicted trajectory is all zero")
    return PeakRangeStat(location, snapshot.release_date, peak.target_date, peak.point,
                         peak.upper - peak.lower)


@dataclass(frozen=True)
class HeatmapCell:
    location: str
    actual: int
    point: float
    lower: float
    upper: float
    coverage: CoverageClass
    pe: PEValue

    @property
    def color(self) -> str:
        """Diverging category: red under-prediction, blue over-prediction."""
        if self.pe is None:
            return "gray"
        if self.pe > 0:
            return "red"
        if self.pe < 0:
            return "blue"
        return "white"


def heatmap_values(records: Iterable[AlignedPrediction]) -> dict[str, HeatmapCell]:
    out: dict[str, HeatmapCell] = {}
    for r in records:
        if r.location in out:
            raise DomainError(f"duplicate record for location {r.location}")
        out[r.location] = HeatmapCell(r.location, r.actual, r.point, r.lower, r.upper,
                                      r.coverage, percentage_error(r.actual, r.point))
    return dict(sorted(out.items()))
