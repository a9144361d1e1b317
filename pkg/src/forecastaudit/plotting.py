"""Matplotlib figures written next to the delimited reports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib import colors as mcolors  # noqa: E402

from .metrics import CoverageRow, HeatmapCell  # noqa: E402
from .stats import ScatterFit  # noqa: E402

CLASS_COLORS = {"below": "#2166ac", "inside": "#f7f7f7", "above": "#b2182b"}
NA_COLOR = "#bdbdbd"
PE_LIMIT = 100.0

_RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "forecastaudit",
    "svg.fonttype": "none",
}


def pe_color(pe: float | None, limit: float = PE_LIMIT) -> str:
    """Diverging blue-white-red hex color anchored at zero; gray for NA."""
    if pe is None:
        return NA_COLOR
    norm = mcolors.TwoSlopeNorm(vmin=-limit, vcenter=0.0, vmax=limit)
    return mcolors.to_hex(plt.get_cmap("RdBu_r")(norm(max(-limit, min(limit, pe)))))


def excess_color(cell: HeatmapCell, scale: float) -> str:
    """Color by how far the actual lies outside the interval, white inside."""
    if cell.coverage.value == "inside" or scale <= 0:
        return "#ffffff"
    dist = cell.actual - cell.upper if cell.coverage.value == "above" else cell.lower - cell.actual
    depth = min(dist / scale, 1.0)
    cmap = plt.get_cmap("Reds" if cell.coverage.value == "above" else "Blues")
    return mcolors.to_hex(cmap(0.25 + 0.75 * depth))


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if path.suffix == ".svg" else {}
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=meta or None)
    plt.close(fig)
    return path


def coverage_figure(rows: Sequence[CoverageRow], path: Path) -> Path:
    """Stacked below/inside/above shares per target date, one panel per horizon."""
    horizons = sorted({r.horizon_k for r in rows})
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(horizons), 1, figsize=(8, 1.8 * len(horizons) + 0.6),
                                 sharex=True, squeeze=False)
        days = sorted({r.target_date for r in rows})
        xpos = {d: i for i, d in enumerate(days)}
        for ax, k in zip(axes[:, 0], horizons):
            sub = [r for r in rows if r.horizon_k == k]
            x = [xpos[r.target_date] for r in sub]
            below = [float(r.below_pct) for r in sub]
            inside = [float(r.inside_pct) for r in sub]
            above = [float(r.above_pct) for r in sub]
            ax.bar(x, below, color=CLASS_COLORS["below"], label="below")
            ax.bar(x, inside, bottom=below, color=CLASS_COLORS["inside"], edgecolor="#999999",
                   linewidth=0.4, label="inside")
            ax.bar(x, above, bottom=[b + i for b, i in zip(below, inside)],
                   color=CLASS_COLORS["above"], label="above")
            ax.axhline(2.5, color="k", lw=0.5, ls=":")
            ax.axhline(97.5, color="k", lw=0.5, ls=":")
            ax.set_ylim(0, 100)
            ax.set_ylabel(f"{k}-step %")
        axes[0, 0].legend(ncol=3, loc="upper right", frameon=False, bbox_to_anchor=(1, 1.3))
        axes[-1, 0].set_xticks(range(len(days)))
        axes[-1, 0].set_xticklabels([d.strftime("%m-%d") for d in days], rotation=90)
        return _save(fig, path)


def heatmap_figure(cells: Mapping[str, HeatmapCell], path: Path, title: str = "") -> Path:
    """Percentage error per location as a sorted bar chart; NA drawn in gray."""
    items = sorted(cells.values(), key=lambda c: (c.pe is None, c.pe if c.pe is not None else 0))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(6, 0.16 * len(items) + 1), 3))
        heights = [max(-PE_LIMIT, min(PE_LIMIT, c.pe)) if c.pe is not None else 0 for c in items]
        ax.bar(range(len(items)), heights, color=[pe_color(c.pe) for c in items],
               edgecolor="#555555", linewidth=0.3)
        for i, c in enumerate(items):
            if c.pe is None:
                ax.text(i, 2, "NA", ha="center", va="bottom", fontsize=6, rotation=90)
        ax.axhline(0, color="k", lw=0.6)
        ax.set_xticks(range(len(items)))
        ax.set_xticklabels([c.location for c in items], rotation=90, fontsize=6)
        ax.set_ylabel(f"PE (%), clipped to ±{PE_LIMIT:g}")
        ax.set_title(title)
        return _save(fig, path)


def boxplot_figure(groups: Sequence[tuple[str, Sequence[float]]], path: Path,
                   ylabel: str, title: str = "", ylim: tuple[float, float] | None = None) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(groups) + 1.5), 3))
        ax.boxplot([list(v) for _, v in groups], whis=1.5,
                   flierprops={"marker": "o", "markersize": 2.5})
        ax.set_xticks(range(1, len(groups) + 1))
        ax.set_xticklabels([label for label, _ in groups], rotation=90)
        ax.set_ylabel(ylabel)
        if ylim:
            ax.set_ylim(*ylim)
        ax.set_title(title)
        return _save(fig, path)


def scatter_figure(fits: Sequence[ScatterFit], path: Path, title: str = "") -> Path:
    """1-step against 2-step errors, one color per interval outcome subset."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 4))
        for fit in fits:
            color = CLASS_COLORS.get(fit.subset, "#666666")
            if fit.subset == "inside":
                color = "#888888"
            xs = [p[1] for p in fit.points]
            ys = [p[2] for p in fit.points]
            ax.scatter(xs, ys, s=12, color=color, edgecolor="k", linewidth=0.3,
                       label=f"{fit.subset} (n={fit.n}, R²={fit.r_squared:.2f})")
            lo, hi = min(xs), max(xs)
            ax.plot([lo, hi], [fit.intercept + fit.slope * lo, fit.intercept + fit.slope * hi],
                    color=color, lw=0.8)
        ax.axhline(0, color="k", lw=0.4)
        ax.axvline(0, color="k", lw=0.4)
        ax.set_xlabel("actual − 2-step prediction")
        ax.set_ylabel("actual − 1-step prediction")
        ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, path)


def smoothing_figure(series, configs, path: Path) -> Path:
    """Reported daily counts against smoothed-then-differenced counts."""
    from .smooth import smooth_then_difference

    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 3))
        ax.bar(series.dates, series.daily, color="#cccccc", label="reported daily")
        for cfg in configs:
            ax.plot(series.dates, smooth_then_difference(series, cfg), lw=1,
                    label=f"w={cfg.window}, r={cfg.repetitions}, {cfg.zero_rule}")
        ax.set_ylabel("daily deaths")
        ax.set_title(series.location)
        ax.legend(frameon=False)
        fig.autofmt_xdate()
        return _save(fig, path)
