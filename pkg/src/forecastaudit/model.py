"""Domain types shared across the toolkit.

All types are frozen dataclasses. Dates are plain ``datetime.date`` calendar
days with no timezone; a snapshot released on day ``R`` only carries
predictions for days strictly after ``R``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import date
from functools import cached_property
from typing import Mapping


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class CoverageClass(str, enum.Enum):
    BELOW = "below"
    INSIDE = "inside"
    ABOVE = "above"

    def __str__(self) -> str:
        return self.value


def horizon(release_date: date, target_date: date) -> int:
    """Number of whole days between a release and the day it predicts."""
    k = (target_date - release_date).days
    if k < 1:
        raise DomainError(
            f"target date {target_date} is not after release date {release_date}")
    return k


def classify(actual: float, lower: float, upper: float) -> CoverageClass:
    """Place an observation relative to a closed prediction interval."""
    if lower > upper:
        raise DomainError(f"lower bound {lower} exceeds upper bound {upper}")
    if actual < lower:
        return CoverageClass.BELOW
    if actual > upper:
        return CoverageClass.ABOVE
    return CoverageClass.INSIDE


@dataclass(frozen=True)
class TruthSeries:
    """Ground-truth death counts for one location.

    ``daily`` is derived by first differences of ``cumulative`` (with
    ``daily[0] == cumulative[0]``) when the source file held cumulative counts.
    Negative daily values are reporting corrections; they are kept and flagged
    in ``anomaly``.
    """

    location: str
    dates: tuple[date, ...]
    cumulative: tuple[int, ...]
    daily: tuple[int, ...]
    anomaly: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.dates)
        if len(self.cumulative) != n or len(self.daily) != n:
            raise DomainError(f"{self.location}: series lengths differ")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise DomainError(f"{self.location}: dates not strictly increasing at {b}")
        if any(c < 0 for c in self.cumulative):
            raise DomainError(f"{self.location}: negative cumulative count")
        flags = tuple(d < 0 for d in self.daily)
        if not self.anomaly:
            object.__setattr__(self, "anomaly", flags)
        elif tuple(self.anomaly) != flags:
            raise DomainError(f"{self.location}: anomaly flags must mark exactly the negative days")

    @classmethod
    def from_cumulative(cls, location: str, dates, cumulative) -> "TruthSeries":
        cumulative = tuple(int(c) for c in cumulative)
        daily = tuple(c - p for p, c in zip((0,) + cumulative[:-1], cumulative))
        return cls(location, tuple(dates), cumulative, daily)

    @classmethod
    def from_daily(cls, location: str, dates, daily) -> "TruthSeries":
        daily = tuple(int(d) for d in daily)
        cumulative, total = [], 0
        for d in daily:
            total += d
            cumulative.append(total)
        return cls(location, tuple(dates), tuple(cumulative), daily)

    @cached_property
    def _daily_by_date(self) -> dict[date, int]:
        return dict(zip(self.dates, self.daily))

    def daily_on(self, day: date) -> int | None:
        return self._daily_by_date.get(day)


@dataclass(frozen=True)
class ForecastEntry:
    location: str
    target_date: date
    point: float
    lower: float
    upper: float

    def __post_init__(self) -> None:
        for name in ("point", "lower", "upper"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(
                    f"{self.location} {self.target_date}: {name}={v} must be finite and >= 0")
        if not self.lower <= self.point <= self.upper:
            raise DomainError(
                f"{self.location} {self.target_date}: bounds out of order "
                f"(lower={self.lower}, point={self.point}, upper={self.upper})")


@dataclass(frozen=True)
class SnapshotProvenance:
    """Row accounting for one parsed forecast file."""

    source: str
    raw_rows: int
    accepted: int
    dropped_past: int
    malformed: int
    issues: tuple[str, ...] = ()


@dataclass(frozen=True)
class ForecastSnapshot:
    release_date: date
    model_tag: str
    entries: tuple[ForecastEntry, ...]
    provenance: SnapshotProvenance | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        seen = set()
        for e in self.entries:
            key = (e.location, e.target_date)
            if key in seen:
                raise DomainError(f"duplicate forecast entry for {key[0]} {key[1]}")
            seen.add(key)
            if e.target_date <= self.release_date:
                raise DomainError(
                    f"entry {key[0]} {key[1]} is not after release {self.release_date}")

    @property
    def locations(self) -> list[str]:
        return sorted({e.location for e in self.entries})

    def trajectory(self, location: str) -> list[ForecastEntry]:
        return sorted((e for e in self.entries if e.location == location),
                      key=lambda e: e.target_date)


@dataclass(frozen=True)
class AlignedPrediction:
    """A forecast entry joined with the count that was eventually reported."""

    location: str
    release_date: date
    target_date: date
    horizon_k: int
    point: float
    lower: float
    upper: float
    actual: int

    def __post_init__(self) -> None:
        if horizon(self.release_date, self.target_date) != self.horizon_k:
            raise DomainError("horizon_k does not match release/target dates")

    @property
    def coverage(self) -> CoverageClass:
        return classify(self.actual, self.lower, self.upper)

    @property
    def error(self) -> float:
        """Signed error, actual minus point."""
        return self.actual - self.point


TruthCollection = Mapping[str, TruthSeries]
