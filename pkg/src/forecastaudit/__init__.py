"""Replay archived probabilistic forecasts against reported counts and audit
the calibration of their 95% prediction intervals."""

from .ingest import (
    Alignment,
    ParseError,
    SnapshotArchive,
    align,
    load_archive,
    parse_snapshot,
    parse_truth,
)
from .metrics import (
    CoverageRow,
    DegeneratePeakError,
    coverage_table,
    heatmap_values,
    lape,
    peak_range,
    percentage_error,
)
from .model import (
    AlignedPrediction,
    CoverageClass,
    DomainError,
    ForecastEntry,
    ForecastSnapshot,
    TruthSeries,
    classify,
    horizon,
)
from .smooth import SmootherConfig, geo_smooth, smooth_then_difference
from .stats import (
    InsufficientDataError,
    LapeMatrix,
    binomial_coverage,
    error_scatter_fit,
    friedman,
    posthoc,
)
from .synth import SyntheticScenario, generate

__version__ = "0.1.0"

__all__ = [
    "AlignedPrediction", "Alignment", "CoverageClass", "CoverageRow", "DegeneratePeakError",
    "DomainError", "ForecastEntry", "ForecastSnapshot", "InsufficientDataError", "LapeMatrix",
    "ParseError", "SmootherConfig", "SnapshotArchive", "SyntheticScenario", "TruthSeries",
    "align", "binomial_coverage", "classify", "coverage_table", "error_scatter_fit", "friedman",
    "generate", "geo_smooth", "heatmap_values", "horizon", "lape", "load_archive",
    "parse_snapshot", "parse_truth", "peak_range", "percentage_error", "posthoc",
    "smooth_then_difference",
]
