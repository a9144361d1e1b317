"""Report assembly: coverage tables, heat-map payloads, boxplot summaries and
the inference report, serialized to CSV, JSON, Markdown, SVG and PNG.

Every CSV/JSON writer orders rows by location, then date, then horizon, so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from .ingest import Alignment, SnapshotArchive, align, load_archive, parse_truth
from .metrics import (
    ApeUnits,
    CoverageRow,
    DegeneratePeakError,
    HeatmapCell,
    coverage_table,
    heatmap_values,
    lape,
    peak_range,
)
from .model import CoverageClass, DomainError, TruthSeries
from .stats import (
    InsufficientDataError,
    LapeMatrix,
    binomial_coverage,
    error_scatter_fit,
    friedman,
    lape_matrix,
    posthoc,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMATS = ("markdown", "csv", "json", "svg", "png")
DEFAULT_GEOMETRY = "assets/us_tiles.svg"
SVG_NS = "http://www.w3.org/2000/svg"


class DataError(Exception):
    """Input data cannot support the requested report."""


class NoDataError(DataError):
    """Nothing could be computed for any requested analysis."""


@dataclass
class RunConfig:
    manifest: Path
    truth: Path
    truth_format: Literal["cumulative", "daily"] = "cumulative"
    horizons: tuple[int, ...] = (1, 2, 3, 4)
    ape_units: ApeUnits = "percent"
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "json", "markdown", "png")
    strict: bool = False

    def __post_init__(self) -> None:
        self.manifest, self.truth, self.out_dir = Path(self.manifest), Path(self.truth), Path(self.out_dir)
        self.horizons = tuple(sorted(set(self.horizons)))
        self.formats = tuple(dict.fromkeys(self.formats))
        if not self.horizons or any(k < 1 for k in self.horizons):
            raise ValueError("at least one positive horizon is required")
        if not self.formats:
            raise ValueError("at least one output format is required")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValueError(f"unknown output format(s): {', '.join(bad)}")
        if self.ape_units not in ("percent", "fraction"):
            raise ValueError(f"unknown APE units {self.ape_units!r}")
        if self.truth_format not in ("cumulative", "daily"):
            raise ValueError(f"unknown truth format {self.truth_format!r}")

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats


@dataclass
class Inputs:
    truth: dict[str, TruthSeries]
    archive: SnapshotArchive
    alignments: dict[int, Alignment] = field(default_factory=dict)


def load_inputs(config: RunConfig) -> Inputs:
    archive = load_archive(config.manifest, strict=config.strict)
    if len(archive) == 0:
        raise DataError(f"{config.manifest}: no snapshots listed")
    truth = parse_truth(config.truth, config.truth_format)
    alignments = {k: align(archive, truth, k) for k in config.horizons}
    return Inputs(truth, archive, alignments)


# -- small serialization helpers -------------------------------------------------

def _num(x: float | None) -> str:
    if x is None:
        return "NA"
    return repr(float(x))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n",
                    encoding="utf-8")
    return path


def _md_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


# -- coverage ------------------------------------------------------------------

COVERAGE_COLUMNS = ("target_date", "horizon", "n", "inside_pct", "below_pct", "above_pct", "cell")


def coverage_rows(alignments: Mapping[int, Alignment]) -> list[CoverageRow]:
    records = [r for k in sorted(alignments) for r in alignments[k]]
    return coverage_table(records)


def coverage_csv_rows(rows: Sequence[CoverageRow]) -> list[list]:
    return [[r.target_date.isoformat(), r.horizon_k, r.n, *r.rounded(), r.cell()] for r in rows]


def coverage_markdown(rows: Sequence[CoverageRow], horizons: Sequence[int]) -> str:
    """Table laid out with one row per target date and one column per horizon;
    each cell reads ``inside(below,above) n=..``."""
    by_key = {(r.target_date, r.horizon_k): r for r in rows}
    header = ["Forecast date"] + [f"{k}-step" for k in horizons]
    body = []
    for day in sorted({r.target_date for r in rows}):
        cells = []
        for k in horizons:
            r = by_key.get((day, k))
            cells.append(f"{r.cell()} n={r.n}" if r else "")
        body.append([day.isoformat(), *cells])
    return ("Percentage of locations inside the 95% interval, "
            "with (below, above) in parentheses.\n\n" + _md_table(header, body))


def parse_coverage_csv(path: Path) -> list[tuple]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [(row["target_date"], int(row["horizon"]), int(row["n"]), int(row["inside_pct"]),
                 int(row["below_pct"]), int(row["above_pct"])) for row in csv.DictReader(fh)]


def cmd_coverage(config: RunConfig, inputs: Inputs | None = None) -> dict[str, Path]:
    inputs = inputs or load_inputs(config)
    rows = coverage_rows(inputs.alignments)
    if not rows:
        raise NoDataError("no forecast entries could be aligned with truth at any horizon")
    out, written = config.out_dir, {}
    if config.wants("csv"):
        written["csv"] = _write_csv(out / "coverage.csv", COVERAGE_COLUMNS, coverage_csv_rows(rows))
        written["records_csv"] = write_aligned_csv(out / "aligned.csv", inputs.alignments)
    if config.wants("markdown"):
        p = out / "coverage.md"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(coverage_markdown(rows, config.horizons), encoding="utf-8")
        written["markdown"] = p
    if config.wants("json"):
        written["json"] = _write_json(out / "coverage.json", {
            "report": "coverage",
            "missing_truth": {str(k): a.missing_truth for k, a in sorted(inputs.alignments.items())},
            "rows": [dict(zip(COVERAGE_COLUMNS, r)) | {
                "inside": c.inside, "below": c.below, "above": c.above}
                for r, c in zip(coverage_csv_rows(rows), rows)],
        })
    if config.wants("png"):
        from .plotting import coverage_figure
        written["png"] = coverage_figure(rows, out / "coverage.png")
    return written


ALIGNED_COLUMNS = ("location", "release_date", "target_date", "horizon", "point", "lower",
                   "upper", "actual", "coverage_class")


def write_aligned_csv(path: Path, alignments: Mapping[int, Alignment]) -> Path:
    records = sorted((r for a in alignments.values() for r in a),
                     key=lambda r: (r.location, r.target_date, r.horizon_k))
    return _write_csv(path, ALIGNED_COLUMNS, (
        [r.location, r.release_date.isoformat(), r.target_date.isoformat(), r.horizon_k,
         _num(r.point), _num(r.lower), _num(r.upper), r.actual, r.coverage.value]
        for r in records))


# -- heat map ------------------------------------------------------------------

HEATMAP_COLUMNS = ("location", "actual", "point", "lower", "upper", "coverage_class", "pe")


def heatmap_csv_rows(cells: Mapping[str, HeatmapCell]) -> list[list]:
    return [[c.location, c.actual, _num(c.point), _num(c.lower), _num(c.upper),
             c.coverage.value, _num(c.pe)] for _, c in sorted(cells.items())]


def default_geometry() -> Path:
    return Path(str(resources.files("forecastaudit").joinpath(DEFAULT_GEOMETRY)))


def render_svg(cells: Mapping[str, HeatmapCell], geometry: Path,
               color_by: Literal["pe", "coverage"] = "pe", title: str = "") -> str:
    """Fill the shapes of a geometry asset whose element ids are location codes.

    Shapes for locations without data are left untouched.
    """
    from .plotting import excess_color, pe_color

    geometry = Path(geometry)
    if not geometry.is_file():
        raise FileNotFoundError(f"geometry asset not found: {geometry}")
    ET.register_namespace("", SVG_NS)
    tree = ET.parse(geometry)
    root = tree.getroot()
    scale = max((max(c.actual - c.upper, c.lower - c.actual, 0) for c in cells.values()), default=0)
    for el in root.iter():
        code = el.get("id")
        if code not in cells or el.tag.split("}")[-1] == "g":
            continue
        c = cells[code]
        fill = pe_color(c.pe) if color_by == "pe" else excess_color(c, scale)
        el.set("fill", fill)
        for old in [ch for ch in el if ch.tag.split("}")[-1] == "title"]:
            el.remove(old)
        tip = ET.SubElement(el, f"{{{SVG_NS}}}title")
        pe = "NA" if c.pe is None else f"{c.pe:.1f}%"
        tip.text = f"{code}: actual {c.actual}, point {c.point:.1f}, PI [{c.lower:.1f}, {c.upper:.1f}], PE {pe}"
    if title:
        t = ET.SubElement(root, f"{{{SVG_NS}}}text", {"x": "10", "y": "14", "font-size": "12",
                                                       "font-family": "sans-serif"})
        t.text = title
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def cmd_heatmap(config: RunConfig, target_date: date, k: int, geometry: Path | None = None,
                color_by: Literal["pe", "coverage"] = "pe",
                inputs: Inputs | None = None) -> dict[str, Path]:
    if config.wants("svg"):
        geometry = Path(geometry) if geometry else default_geometry()
        if not geometry.is_file():
            raise FileNotFoundError(f"geometry asset not found: {geometry}")
    inputs = inputs or load_inputs(config)
    alignment = inputs.alignments.get(k) or align(inputs.archive, inputs.truth, k)
    records = [r for r in alignment if r.target_date == target_date]
    if not records:
        raise NoDataError(f"no aligned {k}-step records for {target_date}")
    cells = heatmap_values(records)
    out, stem, written = config.out_dir, f"heatmap_{target_date.isoformat()}_k{k}", {}
    title = f"{target_date.isoformat()}, {k}-step"
    if config.wants("csv"):
        written["csv"] = _write_csv(out / f"{stem}.csv", HEATMAP_COLUMNS, heatmap_csv_rows(cells))
    if config.wants("json"):
        written["json"] = _write_json(out / f"{stem}.json", {
            "report": "heatmap", "target_date": target_date.isoformat(), "horizon": k,
            "cells": [dict(zip(HEATMAP_COLUMNS, row)) | {"color": cells[row[0]].color}
                      for row in heatmap_csv_rows(cells)]})
    if config.wants("markdown"):
        p = out / f"{stem}.md"
        p.write_text(_md_table(HEATMAP_COLUMNS, heatmap_csv_rows(cells)), encoding="utf-8")
        written["markdown"] = p
    if config.wants("svg"):
        p = out / f"{stem}.svg"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(render_svg(cells, geometry, color_by, title), encoding="utf-8")
        written["svg"] = p
    if config.wants("png"):
        from .plotting import heatmap_figure
        written["png"] = heatmap_figure(cells, out / f"{stem}.png", title)
    return written


# -- boxplots ------------------------------------------------------------------

@dataclass(frozen=True)
class BoxSummary:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def box_summary(values: Sequence[float]) -> BoxSummary:
    """Five-number summary with linearly interpolated quartiles and 1.5 IQR fences."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise InsufficientDataError("empty group")
    q1, med, q3 = np.percentile(v, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = v[(v < lo_fence) | (v > hi_fence)]
    return BoxSummary(int(v.size), float(v[0]), float(q1), float(med), float(q3), float(v[-1]),
                      float(inside.min()), float(inside.max()), tuple(float(x) for x in outliers))


BOX_COLUMNS = ("metric", "release_date", "target_date", "horizon", "n", "min", "q1", "median",
               "q3", "max", "whisker_low", "whisker_high", "outliers")


def lape_groups(alignments: Mapping[int, Alignment], units: ApeUnits = "percent",
                ) -> dict[tuple[date, date, int], list[float]]:
    groups: dict[tuple[date, date, int], list[float]] = {}
    for k in sorted(alignments):
        for r in alignments[k]:
            groups.setdefault((r.release_date, r.target_date, k), []).append(
                lape(r.actual, r.point, units))
    return dict(sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][2])))


def peak_ratio_values(archive: SnapshotArchive) -> tuple[dict[date, dict[str, float]], list[str]]:
    """Normalized peak-interval range per release and location, plus skip notes."""
    out, notes = {}, []
    for snap in archive:
        ratios = {}
        for loc in snap.locations:
            try:
                ratios[loc] = peak_range(snap, loc).ratio
            except DegeneratePeakError as exc:
                notes.append(str(exc))
        out[snap.release_date] = ratios
    return out, notes


def cmd_boxplots(config: RunConfig, metric: Literal["lape", "peak_ratio"] = "lape",
                 inputs: Inputs | None = None) -> dict[str, Path]:
    inputs = inputs or load_inputs(config)
    notes: list[str] = []
    if metric == "lape":
        raw = {key: vals for key, vals in lape_groups(inputs.alignments, config.ape_units).items()}
    elif metric == "peak_ratio":
        ratios, notes = peak_ratio_values(inputs.archive)
        raw = {(r, None, None): [v for _, v in sorted(vals.items())] for r, vals in ratios.items()}
    else:
        raise ValueError(f"unknown boxplot metric {metric!r}")
    summaries = {}
    for key, vals in raw.items():
        if not vals:
            notes.append(f"empty group {key[0]} skipped")
            continue
        summaries[key] = box_summary(vals)
    if not summaries:
        raise NoDataError(f"no {metric} values to summarize")

    rows = []
    for (release, target, k), s in summaries.items():
        rows.append([metric, release.isoformat(), target.isoformat() if target else "",
                     "" if k is None else k, s.n, _num(s.min), _num(s.q1), _num(s.median),
                     _num(s.q3), _num(s.max), _num(s.whisker_low), _num(s.whisker_high),
                     " ".join(_num(o) for o in s.outliers)])
    out, stem, written = config.out_dir, f"boxplots_{metric}", {}
    if config.wants("csv"):
        written["csv"] = _write_csv(out / f"{stem}.csv", BOX_COLUMNS, rows)
    if config.wants("json"):
        written["json"] = _write_json(out / f"{stem}.json", {
            "report": "boxplots", "metric": metric, "notes": notes,
            "groups": [dict(zip(BOX_COLUMNS, row)) for row in rows]})
    if config.wants("markdown"):
        p = out / f"{stem}.md"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(_md_table(BOX_COLUMNS, rows), encoding="utf-8")
        written["markdown"] = p
    fig_formats = [f for f in ("svg", "png") if config.wants(f)]
    if fig_formats:
        from .plotting import boxplot_figure
        ylabel = "LAPE" if metric == "lape" else "PI range / peak"
        ylim = (0.48, 1.02) if metric == "lape" else None
        panels = sorted({key[2] for key in summaries}, key=lambda k: (k is None, k))
        for k in panels:
            groups = [((t or r).strftime("%m-%d"), raw[(r, t, kk)])
                      for (r, t, kk) in summaries if kk == k]
            suffix = "" if k is None else f"_k{k}"
            title = ("" if k is None else f"{k}-step ahead")
            for fmt in fig_formats:
                written[f"{fmt}{suffix}"] = boxplot_figure(
                    groups, out / f"{stem}{suffix}.{fmt}", ylabel, title, ylim)
    return written


# -- inference -----------------------------------------------------------------

def _friedman_block(matrix: LapeMatrix, alpha: float, posthoc_method: str, method: str,
                    seed: int) -> dict:
    res = friedman(matrix, method=method, seed=seed)
    block = {
        "treatments": [str(t) for t in matrix.treatments],
        "blocks_used": res.b, "excluded_blocks": res.excluded, "k": res.k,
        "statistic": res.statistic, "p_value": res.p_value, "p_chi2": res.p_chi2,
        "method": res.method, "mean_ranks": list(res.mean_ranks),
    }
    ph = posthoc(matrix, alpha, posthoc_method, omnibus=res)
    block["posthoc"] = {
        "method": ph.method, "alpha": alpha, "note": ph.note,
        "elevated": [str(t) for t in ph.elevated],
        "pairs": [{"a": str(p.a), "b": str(p.b), "mean_rank_a": p.mean_rank_a,
                   "mean_rank_b": p.mean_rank_b, "statistic": p.statistic,
                   "p_adjusted": p.p_adjusted, "significant": p.significant}
                  for p in ph.pairs],
    }
    return block


def stats_report(inputs: Inputs, horizons: Sequence[int], units: ApeUnits = "percent",
                 alpha: float = 0.05, posthoc_method: str = "nemenyi",
                 friedman_method: str = "auto", seed: int = 0) -> dict:
    errors = 0
    attempts = 0
    friedman_out = []
    for k in horizons:
        attempts += 1
        entry: dict = {"horizon": k}
        try:
            entry |= _friedman_block(lape_matrix(inputs.alignments[k], units), alpha,
                                     posthoc_method, friedman_method, seed)
        except (InsufficientDataError, DomainError) as exc:
            entry["error"] = str(exc)
            errors += 1
        friedman_out.append(entry)

    attempts += 1
    ratios, notes = peak_ratio_values(inputs.archive)
    cells = {(loc, r.isoformat()): v for r, d in ratios.items() for loc, v in d.items()}
    peak: dict = {"notes": notes}
    try:
        peak |= _friedman_block(LapeMatrix.from_cells(cells), alpha, posthoc_method,
                                friedman_method, seed)
    except (InsufficientDataError, DomainError) as exc:
        peak["error"] = str(exc)
        errors += 1

    binom = []
    for row in coverage_rows(inputs.alignments):
        attempts += 1
        res = binomial_coverage(row.inside, row.n, 0.95)
        binom.append({"target_date": row.target_date.isoformat(), "horizon": row.horizon_k,
                      "n": row.n, "inside": row.inside, "p_value": res.p_value,
                      "significant_at_5pct": res.significant_at_5pct})

    scatter = []
    one, two = inputs.alignments.get(1), inputs.alignments.get(2)
    if one is not None and two is not None:
        days = sorted({r.target_date for r in one} & {r.target_date for r in two})
        for day in days:
            k1 = [r for r in one if r.target_date == day]
            k2 = [r for r in two if r.target_date == day]
            for subset in ("above", "below", "inside", "all"):
                attempts += 1
                entry = {"target_date": day.isoformat(), "subset": subset}
                try:
                    fit = error_scatter_fit(k1, k2, subset)
                    entry |= {"n": fit.n, "slope": fit.slope, "intercept": fit.intercept,
                              "r_squared": fit.r_squared}
                except InsufficientDataError as exc:
                    entry["error"] = str(exc)
                    errors += 1
                scatter.append(entry)

    return {"report": "stats", "ape_units": units, "alpha": alpha,
            "friedman": friedman_out, "peak_ratio_friedman": peak,
            "binomial": binom, "scatter": scatter,
            "_attempts": attempts, "_errors": errors}


def stats_markdown(rep: dict) -> str:
    parts = ["## Friedman test on LAPE by horizon\n"]
    rows = []
    for f in rep["friedman"]:
        if "error" in f:
            rows.append([f["horizon"], "", "", "", "", f["error"]])
        else:
            rows.append([f["horizon"], f["blocks_used"], f["k"], f"{f['statistic']:.3f}",
                         f"{f['p_value']:.4g} ({f['method']})",
                         ", ".join(f["posthoc"]["elevated"]) or f["posthoc"]["note"]])
    parts.append(_md_table(["horizon", "blocks", "treatments", "Q", "p", "elevated / note"], rows))
    pk = rep["peak_ratio_friedman"]
    parts.append("\n## Friedman test on normalized peak range across releases\n\n")
    parts.append(pk.get("error") or f"Q = {pk['statistic']:.3f}, p = {pk['p_value']:.4g} "
                 f"({pk['method']}), blocks = {pk['blocks_used']}\n")
    parts.append("\n## One-tailed binomial test of coverage against 0.95\n\n")
    parts.append(_md_table(["target date", "horizon", "n", "inside", "p", "significant"],
                           [[b["target_date"], b["horizon"], b["n"], b["inside"],
                             f"{b['p_value']:.4g}", "yes" if b["significant_at_5pct"] else "no"]
                            for b in rep["binomial"]]))
    if rep["scatter"]:
        parts.append("\n## 1-step vs 2-step error fits\n\n")
        parts.append(_md_table(["target date", "subset", "n", "slope", "intercept", "R²"],
                               [[s["target_date"], s["subset"], s.get("n", ""),
                                 f"{s['slope']:.4g}" if "slope" in s else "",
                                 f"{s['intercept']:.4g}" if "slope" in s else "",
                                 f"{s['r_squared']:.4f}" if "slope" in s else s["error"]]
                                for s in rep["scatter"]]))
    return "".join(parts)


def cmd_stats(config: RunConfig, alpha: float = 0.05, posthoc_method: str = "nemenyi",
              friedman_method: str = "auto", seed: int = 0,
              inputs: Inputs | None = None) -> dict[str, Path]:
    inputs = inputs or load_inputs(config)
    rep = stats_report(inputs, config.horizons, config.ape_units, alpha, posthoc_method,
                       friedman_method, seed)
    attempts, errors = rep.pop("_attempts"), rep.pop("_errors")
    if attempts == errors:
        raise NoDataError("insufficient data for every requested analysis")
    out, written = config.out_dir, {}
    if config.wants("json"):
        written["json"] = _write_json(out / "stats.json", rep)
    if config.wants("markdown"):
        p = out / "stats.md"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(stats_markdown(rep), encoding="utf-8")
        written["markdown"] = p
    if config.wants("csv"):
        written["csv"] = _write_csv(out / "stats_binomial.csv",
                                    ("target_date", "horizon", "n", "inside", "p_value",
                                     "significant_at_5pct"),
                                    ([b["target_date"], b["horizon"], b["n"], b["inside"],
                                      _num(b["p_value"]), b["significant_at_5pct"]]
                                     for b in rep["binomial"]))
    fig_formats = [f for f in ("svg", "png") if config.wants(f)]
    if fig_formats and 1 in inputs.alignments and 2 in inputs.alignments:
        from .plotting import scatter_figure
        one, two = inputs.alignments[1], inputs.alignments[2]
        for day in sorted({r.target_date for r in one} & {r.target_date for r in two}):
            fits = []
            for subset in (CoverageClass.ABOVE, CoverageClass.BELOW, CoverageClass.INSIDE):
                try:
                    fits.append(error_scatter_fit([r for r in one if r.target_date == day],
                                                  [r for r in two if r.target_date == day],
                                                  subset))
                except InsufficientDataError:
                    continue
            if fits:
                for fmt in fig_formats:
                    written[f"scatter_{day.isoformat()}.{fmt}"] = scatter_figure(
                        fits, out / f"scatter_{day.isoformat()}.{fmt}", day.isoformat())
    return written
