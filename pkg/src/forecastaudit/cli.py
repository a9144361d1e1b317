"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 insufficient data for every requested analysis.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .ingest import ParseError, load_archive, parse_truth, truth_anomalies
from .model import DomainError
from .report import (
    FORMATS,
    DataError,
    NoDataError,
    RunConfig,
    cmd_boxplots,
    cmd_coverage,
    cmd_heatmap,
    cmd_stats,
)
from .smooth import SmootherConfig, sweep, write_sweep
from .synth import SyntheticScenario, write_scenario

log = logging.getLogger("forecastaudit")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NODATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _iso(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}")


def _add_inputs(p: argparse.ArgumentParser, need_manifest: bool = True) -> None:
    if need_manifest:
        p.add_argument("--manifest", type=Path, required=True,
                       help="JSON list of {path, release_date, model_tag}")
    p.add_argument("--truth", type=Path, required=True, help="truth CSV (location,date,count)")
    p.add_argument("--truth-format", choices=("cumulative", "daily"), default="cumulative")
    p.add_argument("--strict", action="store_true",
                   help="fail on malformed forecast rows instead of counting them")


def _add_run(p: argparse.ArgumentParser) -> None:
    _add_inputs(p)
    p.add_argument("--horizons", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--ape-units", choices=("percent", "fraction"), default="percent")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--format", type=_str_list, default=["csv", "json", "markdown", "png"],
                   help=f"comma-separated subset of {','.join(FORMATS)}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="forecastaudit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest-check", help="parse inputs and report row accounting")
    _add_inputs(p)
    p.add_argument("--json", action="store_true", help="print the report as JSON")

    p = sub.add_parser("coverage", help="interval coverage table per target date and horizon")
    _add_run(p)

    p = sub.add_parser("heatmap", help="per-location percentage error for one date and horizon")
    _add_run(p)
    p.add_argument("--date", type=_iso, required=True, help="target date")
    p.add_argument("--k", type=int, default=1, help="horizon in days")
    p.add_argument("--geometry", type=Path, default=None,
                   help="SVG whose element ids are location codes (default: bundled tile grid)")
    p.add_argument("--color-by", choices=("pe", "coverage"), default="pe")

    p = sub.add_parser("boxplots", help="five-number summaries per release date")
    _add_run(p)
    p.add_argument("--metric", choices=("lape", "peak_ratio"), default="lape")

    p = sub.add_parser("stats", help="Friedman, binomial and scatter-fit inference")
    _add_run(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--posthoc", choices=("nemenyi", "wilcoxon-holm"), default="nemenyi")
    p.add_argument("--friedman-method", default="auto",
                   choices=("auto", "chi-square-approx", "exact-permutation", "monte-carlo"))
    p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo p-values")

    p = sub.add_parser("smooth", help="geometric-mean smoothing sensitivity sweep")
    _add_inputs(p, need_manifest=False)
    p.add_argument("--window", type=_int_list, default=[3])
    p.add_argument("--repetitions", type=_int_list, default=[10])
    p.add_argument("--zero-rule", type=_str_list, default=["propagate-zero", "shift-by-one"])
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--plot-location", default=None,
                   help="also render a PNG comparing raw and smoothed daily counts")

    p = sub.add_parser("synth", help="write a synthetic archive with known calibration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--locations", type=int, default=51)
    p.add_argument("--days", type=int, default=40)
    p.add_argument("--trend", choices=("flat", "bell-curve"), default="bell-curve")
    p.add_argument("--amplitude", type=float, default=100.0)
    p.add_argument("--baseline", type=float, default=50.0)
    p.add_argument("--noise-scale", type=float, default=5.0)
    p.add_argument("--calibration", choices=("calibrated", "overconfident", "biased"),
                   default="calibrated")
    p.add_argument("--shrink", type=float, default=0.5)
    p.add_argument("--shift", type=_float_list, default=[2.0],
                   help="bias in noise-sd units; several values cycle by day")
    p.add_argument("--max-horizon", type=int, default=4)
    p.add_argument("--snapshot-every", type=int, default=1)
    p.add_argument("--start", type=_iso, default=date(2020, 3, 1))
    p.add_argument("--out", type=Path, default=Path("synthetic"))
    return parser


def _config(args) -> RunConfig:
    try:
        return RunConfig(manifest=args.manifest, truth=args.truth, truth_format=args.truth_format,
                         horizons=tuple(args.horizons), ape_units=args.ape_units,
                         out_dir=args.out, formats=tuple(args.format), strict=args.strict)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _ingest_check(args) -> int:
    archive = load_archive(args.manifest, strict=args.strict)
    truth = parse_truth(args.truth, args.truth_format)
    files = []
    for r, p in archive.provenance.items():
        files.append({"release_date": r.isoformat(), "model_tag": archive.snapshots[r].model_tag,
                      "source": p.source, "raw_rows": p.raw_rows, "accepted": p.accepted,
                      "dropped_past": p.dropped_past, "malformed": p.malformed,
                      "issues": list(p.issues)})
    anomalies = [{"location": loc, "date": d.isoformat(), "daily": v}
                 for loc, d, v in truth_anomalies(truth)]
    report = {"schema_version": 1, "snapshots": files, "truth_locations": len(truth),
              "truth_anomalies": anomalies}
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for f in files:
            print(f"{f['release_date']} [{f['model_tag']}] {f['source']}: {f['raw_rows']} rows, "
                  f"{f['accepted']} accepted, {f['dropped_past']} past-dated, "
                  f"{f['malformed']} malformed")
            for issue in f["issues"]:
                print(f"    {issue}")
        print(f"truth: {len(truth)} locations, {len(anomalies)} negative daily counts")
    if not files:
        raise DataError(f"{args.manifest}: no snapshots listed")
    return EXIT_OK


def _smooth(args) -> int:
    try:
        configs = [SmootherConfig(w, r, z) for w in args.window for r in args.repetitions
                   for z in args.zero_rule]
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    truth = parse_truth(args.truth, args.truth_format)
    rows, skipped = sweep(truth, args.window, args.repetitions, args.zero_rule)
    for loc in skipped:
        log.warning("%s: cumulative counts decrease; skipped (see ingest-check anomalies)", loc)
    if not rows:
        raise NoDataError("no location has a monotone cumulative series")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "smooth_sweep.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_sweep(rows, fh)
    print(path)
    if args.plot_location:
        if args.plot_location not in truth:
            raise UsageError(f"unknown location {args.plot_location!r}")
        from .plotting import smoothing_figure
        print(smoothing_figure(truth[args.plot_location], configs,
                               args.out / f"smooth_{args.plot_location}.png"))
    return EXIT_OK


def _synth(args) -> int:
    try:
        scenario = SyntheticScenario(
            seed=args.seed, locations=args.locations, days=args.days, trend=args.trend,
            amplitude=args.amplitude, baseline=args.baseline, noise_scale=args.noise_scale,
            calibration=args.calibration, shrink=args.shrink,
            shift=args.shift[0] if len(args.shift) == 1 else tuple(args.shift),
            max_horizon=args.max_horizon, snapshot_every=args.snapshot_every, start=args.start)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    print(write_scenario(scenario, args.out))
    return EXIT_OK


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ingest-check":
            return _ingest_check(args)
        if args.command == "smooth":
            return _smooth(args)
        if args.command == "synth":
            return _synth(args)
        config = _config(args)
        if args.command == "coverage":
            written = cmd_coverage(config)
        elif args.command == "heatmap":
            written = cmd_heatmap(config, args.date, args.k, args.geometry, args.color_by)
        elif args.command == "boxplots":
            written = cmd_boxplots(config, args.metric)
        elif args.command == "stats":
            written = cmd_stats(config, args.alpha, args.posthoc, args.friedman_method, args.seed)
        else:  # pragma: no cover - argparse rejects unknown commands
            raise UsageError(f"unknown command {args.command}")
        for path in written.values():
            print(path)
        return EXIT_OK
    except UsageError as exc:
        print(f"forecastaudit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"forecastaudit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoDataError as exc:
        print(f"forecastaudit: insufficient data: {exc}", file=sys.stderr)
        return EXIT_NODATA
    except (DataError, ParseError, DomainError) as exc:
        print(f"forecastaudit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
