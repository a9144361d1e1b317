"""Reading and writing the canonical CSV/JSON formats, and the k-step join.

Truth CSV::

    location,date,count

Forecast CSV (one file per model release)::

    location,target_date,point,lower,upper

Manifest JSON: a list of ``{"path", "release_date", "model_tag"}`` objects;
relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import IO, Iterable, Iterator, Literal, Mapping, Union

from .model import (
    AlignedPrediction,
    DomainError,
    ForecastEntry,
    ForecastSnapshot,
    SnapshotProvenance,
    TruthSeries,
)

log = logging.getLogger(__name__)

TRUTH_COLUMNS = ("location", "date", "count")
FORECAST_COLUMNS = ("location", "target_date", "point", "lower", "upper")

Source = Union[str, os.PathLike, bytes, IO[bytes], IO[str]]


class ParseError(ValueError):
    """Malformed input file; carries the source name and 1-based line number."""

    def __init__(self, message: str, source: str = "<stream>", line: int | None = None):
        self.source = source
        self.line = line
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {message}")


def parse_date(text: str) -> date:
    return date.fromisoformat(text.strip())


def _source_name(src: Source) -> str:
    if isinstance(src, (str, os.PathLike)):
        return os.fspath(src)
    return getattr(src, "name", "<stream>") if not isinstance(src, bytes) else "<bytes>"


def _read_text(src: Source) -> str:
    if isinstance(src, (str, os.PathLike)):
        return Path(src).read_text(encoding="utf-8-sig")
    if isinstance(src, bytes):
        return src.decode("utf-8-sig")
    data = src.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def _rows(text: str, required: tuple[str, ...], source: str) -> Iterator[tuple[int, dict]]:
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"missing column {missing[0]!r} in header {header}", source, 1)
    reader.fieldnames = header
    for row in reader:
        if not any((v or "").strip() for v in row.values() if isinstance(v, str)):
            continue
        yield reader.line_num, row


def _parse_int(text: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"not an integer count: {text!r}")
        return int(value)


def parse_truth(src: Source, format: Literal["cumulative", "daily"] = "cumulative",
                ) -> dict[str, TruthSeries]:
    """Parse a truth CSV into one :class:`TruthSeries` per location."""
    if format not in ("cumulative", "daily"):
        raise ValueError(f"unknown truth format {format!r}")
    name = _source_name(src)
    by_loc: dict[str, dict[date, int]] = defaultdict(dict)
    for line, row in _rows(_read_text(src), TRUTH_COLUMNS, name):
        loc = row["location"].strip()
        try:
            day = parse_date(row["date"])
        except ValueError:
            raise ParseError(f"bad date {row['date']!r}", name, line) from None
        try:
            count = _parse_int(row["count"])
        except (ValueError, AttributeError):
            raise ParseError(f"non-numeric count {row['count']!r}", name, line) from None
        if day in by_loc[loc]:
            raise ParseError(f"duplicate row for ({loc}, {day})", name, line)
        by_loc[loc][day] = count

    out = {}
    for loc in sorted(by_loc):
        days = sorted(by_loc[loc])
        counts = [by_loc[loc][d] for d in days]
        try:
            if format == "cumulative":
                out[loc] = TruthSeries.from_cumulative(loc, days, counts)
            else:
                out[loc] = TruthSeries.from_daily(loc, days, counts)
        except DomainError as exc:
            raise ParseError(str(exc), name) from None
    return out


def parse_snapshot(src: Source, release_date: date, model_tag: str = "",
                   strict: bool = False) -> ForecastSnapshot:
    """Parse one forecast release.

    Rows dated on or before ``release_date`` are dropped and counted. Rows that
    fail validation (non-numeric, negative, bounds out of order, duplicate key)
    are counted as malformed, or raise :class:`ParseError` when ``strict``.
    Header problems always raise.
    """
    name = _source_name(src)
    entries: dict[tuple[str, date], ForecastEntry] = {}
    raw = dropped = 0
    issues: list[str] = []

    def reject(msg: str, line: int) -> None:
        if strict:
            raise ParseError(msg, name, line)
        issues.append(f"line {line}: {msg}")

    for line, row in _rows(_read_text(src), FORECAST_COLUMNS, name):
        raw += 1
        loc = row["location"].strip()
        try:
            target = parse_date(row["target_date"])
        except (ValueError, AttributeError):
            reject(f"bad target_date {row['target_date']!r}", line)
            continue
        if target <= release_date:
            dropped += 1
            continue
        try:
            point, lower, upper = (float(row[c]) for c in ("point", "lower", "upper"))
        except (ValueError, TypeError):
            reject(f"non-numeric value for ({loc}, {target})", line)
            continue
        try:
            entry = ForecastEntry(loc, target, point, lower, upper)
        except DomainError as exc:
            reject(str(exc), line)
            continue
        if (loc, target) in entries:
            reject(f"duplicate row for ({loc}, {target})", line)
            continue
        entries[(loc, target)] = entry

    prov = SnapshotProvenance(
        source=name, raw_rows=raw, accepted=len(entries), dropped_past=dropped,
        malformed=len(issues), issues=tuple(issues))
    ordered = tuple(entries[k] for k in sorted(entries))
    return ForecastSnapshot(release_date, model_tag, ordered, provenance=prov)


@dataclass(frozen=True)
class ManifestItem:
    path: Path
    release_date: date
    model_tag: str


@dataclass
class SnapshotArchive:
    """Forecast snapshots keyed by release date."""

    snapshots: dict[date, ForecastSnapshot] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.snapshots = dict(sorted(self.snapshots.items()))
        for r, s in self.snapshots.items():
            if s.release_date != r:
                raise DomainError(f"snapshot keyed {r} has release date {s.release_date}")

    @classmethod
    def from_snapshots(cls, snapshots: Iterable[ForecastSnapshot]) -> "SnapshotArchive":
        out: dict[date, ForecastSnapshot] = {}
        for s in snapshots:
            if s.release_date in out:
                raise DomainError(f"duplicate release date {s.release_date}")
            out[s.release_date] = s
        return cls(out)

    @property
    def provenance(self) -> dict[date, SnapshotProvenance | None]:
        return {r: s.provenance for r, s in self.snapshots.items()}

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self) -> Iterator[ForecastSnapshot]:
        return iter(self.snapshots.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SnapshotArchive):
            return NotImplemented
        return self.snapshots == other.snapshots


def read_manifest(path: str | os.PathLike) -> list[ManifestItem]:
    path = Path(path)
    try:
        items = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from None
    if isinstance(items, dict):
        items = items.get("snapshots", [])
    out = []
    for i, item in enumerate(items):
        try:
            p = Path(item["path"])
            out.append(ManifestItem(
                path=p if p.is_absolute() else path.parent / p,
                release_date=parse_date(item["release_date"]),
                model_tag=str(item.get("model_tag", ""))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"manifest entry {i} invalid: {exc}", str(path)) from None
    return out


def load_archive(manifest: str | os.PathLike, strict: bool = False,
                 workers: int = 1) -> SnapshotArchive:
    """Parse every file listed in a manifest. Files parse independently."""
    items = read_manifest(manifest)

    def one(item: ManifestItem) -> ForecastSnapshot:
        return parse_snapshot(item.path, item.release_date, item.model_tag, strict=strict)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            snaps = list(pool.map(one, items))
    else:
        snaps = [one(item) for item in items]
    for s in snaps:
        p = s.provenance
        if p is not None and (p.dropped_past or p.malformed):
            log.info("%s: %d accepted, %d past-dated dropped, %d malformed",
                     p.source, p.accepted, p.dropped_past, p.malformed)
    return SnapshotArchive.from_snapshots(snaps)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_snapshot(snapshot: ForecastSnapshot, out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(FORECAST_COLUMNS)
    for e in sorted(snapshot.entries, key=lambda e: (e.location, e.target_date)):
        w.writerow([e.location, e.target_date.isoformat(), _fmt(e.point),
                    _fmt(e.lower), _fmt(e.upper)])


def write_truth(truth: Mapping[str, TruthSeries], out: IO[str],
                format: Literal["cumulative", "daily"] = "cumulative") -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRUTH_COLUMNS)
    for loc in sorted(truth):
        s = truth[loc]
        counts = s.cumulative if format == "cumulative" else s.daily
        for d, c in zip(s.dates, counts):
            w.writerow([loc, d.isoformat(), c])


def write_archive(archive: SnapshotArchive, directory: str | os.PathLike,
                  manifest_name: str = "manifest.json") -> Path:
    """Write one CSV per snapshot plus a manifest; returns the manifest path."""
    directory = Path(directory)
    (directory / "forecasts").mkdir(parents=True, exist_ok=True)
    items = []
    for s in archive:
        rel = Path("forecasts") / f"{s.release_date.isoformat()}.csv"
        with open(directory / rel, "w", encoding="utf-8", newline="") as fh:
            write_snapshot(s, fh)
        items.append({"path": rel.as_posix(), "release_date": s.release_date.isoformat(),
                      "model_tag": s.model_tag})
    manifest = directory / manifest_name
    manifest.write_text(json.dumps(items, indent=2) + "\n", encoding="utf-8")
    return manifest


@dataclass(frozen=True)
class Alignment:
    """Result of a k-step join: the records plus how many entries lacked truth."""

    k: int
    records: tuple[AlignedPrediction, ...]
    missing_truth: int = 0

    def __iter__(self) -> Iterator[AlignedPrediction]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def align(archive: SnapshotArchive | Iterable[ForecastSnapshot],
          truth: Mapping[str, TruthSeries], k: int) -> Alignment:
    """Join every k-step-ahead forecast entry with its reported daily count."""
    if k < 1:
        raise DomainError(f"horizon must be >= 1, got {k}")
    records, missing = [], 0
    snapshots = archive if isinstance(archive, SnapshotArchive) else SnapshotArchive.from_snapshots(archive)
    for snap in snapshots:
        target = date.fromordinal(snap.release_date.toordinal() + k)
        for e in snap.entries:
            if e.target_date != target:
                continue
            series = truth.get(e.location)
            actual = series.daily_on(target) if series is not None else None
            if actual is None:
                missing += 1
                continue
            records.append(AlignedPrediction(
                e.location, snap.release_date, target, k, e.point, e.lower, e.upper, actual))
    records.sort(key=lambda r: (r.release_date, r.location))
    return Alignment(k, tuple(records), missing)


def truth_anomalies(truth: Mapping[str, TruthSeries]) -> list[tuple[str, date, int]]:
    return [(loc, d, v) for loc in sorted(truth)
            for d, v, a in zip(truth[loc].dates, truth[loc].daily, truth[loc].anomaly) if a]

