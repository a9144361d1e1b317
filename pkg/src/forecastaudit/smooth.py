"""Iterated moving geometric-mean smoothing of cumulative counts.

One pass replaces each value with the geometric mean of a centered window
that shrinks at the ends of the series, so output length equals input length.
After ``r`` passes of a window of width ``w`` a change at index ``i`` reaches
indices ``i - r*(w-1)/2`` through ``i + r*(w-1)/2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable, Literal, Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import DomainError, TruthSeries

ZeroRule = Literal["propagate-zero", "shift-by-one"]


@dataclass(frozen=True)
class SmootherConfig:
    window: int = 3
    repetitions: int = 10
    zero_rule: ZeroRule = "propagate-zero"

    def __post_init__(self) -> None:
        if self.window < 1 or self.window % 2 == 0:
            raise DomainError(f"window must be a positive odd integer, got {self.window}")
        if self.repetitions < 1:
            raise DomainError(f"repetitions must be positive, got {self.repetitions}")
        if self.zero_rule not in ("propagate-zero", "shift-by-one"):
            raise DomainError(f"unknown zero rule {self.zero_rule!r}")

    @property
    def half_width(self) -> int:
        """Reach of the composed filter in days."""
        return self.repetitions * (self.window - 1) // 2


def _geo_pass(x: np.ndarray, window: int) -> np.ndarray:
    h = window // 2
    padded = np.pad(x, h, constant_values=np.nan)
    win = sliding_window_view(padded, window)
    # scale each window by its max so equal values come back bit-exact
    ref = np.nanmax(win, axis=1)
    safe = np.where(ref > 0, ref, 1.0)
    with np.errstate(divide="ignore"):
        logs = np.log(win / safe[:, None])
    out = safe * np.exp(np.nanmean(logs, axis=1))
    return np.where(ref > 0, out, 0.0)


def geo_smooth(series: Iterable[float], config: SmootherConfig = SmootherConfig()) -> np.ndarray:
    """Apply ``config.repetitions`` passes of the windowed geometric mean.

    Under ``propagate-zero`` any window holding a zero yields zero. Under
    ``shift-by-one`` the passes run on ``x + 1`` and 1 is subtracted at the end.
    """
    x = np.asarray(list(series) if not isinstance(series, np.ndarray) else series, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("series must be a non-empty 1-d sequence")
    if np.isnan(x).any() or (x < 0).any():
        raise DomainError("series values must be nonnegative numbers")
    shift = config.zero_rule == "shift-by-one"
    if shift:
        x = x + 1.0
    for _ in range(config.repetitions):
        x = _geo_pass(x, config.window)
    return x - 1.0 if shift else x


def smooth_then_difference(series: TruthSeries,
                           config: SmootherConfig = SmootherConfig()) -> np.ndarray:
    """Smooth the cumulative counts, then take first differences (first day kept)."""
    cum = np.asarray(series.cumulative, dtype=float)
    bad = np.flatnonzero(np.diff(cum) < 0)
    if bad.size:
        days = ", ".join(str(series.dates[i + 1]) for i in bad[:5])
        raise DomainError(
            f"{series.location}: cumulative counts decrease on {days}; "
            "repair or exclude the days flagged in TruthSeries.anomaly first")
    smoothed = geo_smooth(cum, config)
    return np.diff(smoothed, prepend=0.0)


SWEEP_COLUMNS = ("window", "repetitions", "zero_rule", "location", "date", "smoothed", "daily")


def sweep(truth: Mapping[str, TruthSeries], windows: Iterable[int] = (3,),
          repetitions: Iterable[int] = (10,),
          zero_rules: Iterable[ZeroRule] = ("propagate-zero", "shift-by-one"),
          ) -> tuple[list[tuple], list[str]]:
    """Smooth every location under every config combination.

    Returns (rows, skipped) where rows follow :data:`SWEEP_COLUMNS` and skipped
    lists locations whose cumulative counts are not monotone.
    """
    rows, skipped = [], []
    windows, repetitions, zero_rules = list(windows), list(repetitions), list(zero_rules)
    for loc in sorted(truth):
        s = truth[loc]
        if any(b < a for a, b in zip(s.cumulative, s.cumulative[1:])):
            skipped.append(loc)
            continue
        for w in windows:
            for r in repetitions:
                for z in zero_rules:
                    cfg = SmootherConfig(w, r, z)
                    sm = geo_smooth(s.cumulative, cfg)
                    daily = np.diff(sm, prepend=0.0)
                    for d, a, b in zip(s.dates, sm, daily):
                        rows.append((w, r, z, loc, d.isoformat(), float(a), float(b)))
    return rows, skipped


def write_sweep(rows: Iterable[tuple], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([*row[:5], repr(row[5]), repr(row[6])])
