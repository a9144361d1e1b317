"""Friedman test with post-hoc comparisons, exact binomial coverage test, and
the OLS fit between 1-step and 2-step errors."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from typing import Hashable, Iterable, Literal, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .metrics import ApeUnits, lape
from .model import AlignedPrediction, CoverageClass, DomainError

FriedmanMethod = Literal["auto", "chi-square-approx", "exact-permutation", "monte-carlo"]

EXACT_LIMIT = 10**7


class InsufficientDataError(DomainError):
    """Too few complete observations for the requested test."""


@dataclass(frozen=True)
class LapeMatrix:
    """Blocks (locations) by treatments (dates); ``nan`` marks a missing cell."""

    blocks: tuple[str, ...]
    treatments: tuple[Hashable, ...]
    values: np.ndarray
    excluded: int = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.blocks), len(self.treatments)):
            raise DomainError(f"values shape {values.shape} does not match "
                              f"{len(self.blocks)} blocks x {len(self.treatments)} treatments")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_cells(cls, cells: Mapping[tuple[str, Hashable], float]) -> "LapeMatrix":
        blocks = tuple(sorted({b for b, _ in cells}))
        treatments = tuple(sorted({t for _, t in cells}))
        bi = {b: i for i, b in enumerate(blocks)}
        ti = {t: j for j, t in enumerate(treatments)}
        values = np.full((len(blocks), len(treatments)), np.nan)
        for (b, t), v in cells.items():
            values[bi[b], ti[t]] = v
        return cls(blocks, treatments, values)

    def complete(self) -> "LapeMatrix":
        """Drop every block with a missing treatment (listwise deletion)."""
        keep = ~np.isnan(self.values).any(axis=1)
        return LapeMatrix(tuple(b for b, k in zip(self.blocks, keep) if k), self.treatments,
                          self.values[keep], self.excluded + int((~keep).sum()))


def lape_matrix(records: Iterable[AlignedPrediction], units: ApeUnits = "percent",
                column: Literal["target_date", "release_date"] = "target_date") -> LapeMatrix:
    cells = {}
    for r in records:
        key = (r.location, getattr(r, column))
        if key in cells:
            raise DomainError(f"duplicate cell {key}; restrict records to one horizon")
        cells[key] = lape(r.actual, r.point, units)
    return LapeMatrix.from_cells(cells)


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    k: int
    b: int
    p_value: float
    method: str
    p_chi2: float
    excluded: int = 0
    rank_sums: tuple[float, ...] = ()

    @property
    def mean_ranks(self) -> tuple[float, ...]:
        return tuple(r / self.b for r in self.rank_sums)


def _block_ranks(values: np.ndarray) -> np.ndarray:
    return np.apply_along_axis(sps.rankdata, 1, values)


def _tie_correction(ranks: np.ndarray) -> float:
    b, k = ranks.shape
    ties = 0
    for row in ranks:
        ties += sum(t ** 3 - t for t in Counter(row.tolist()).values())
    return 1.0 - ties / (b * k * (k * k - 1))


def _q_from_rank_sums(sum_sq: float, b: int, k: int, correction: float) -> float:
    q = 12.0 / (b * k * (k + 1)) * sum_sq - 3.0 * b * (k + 1)
    return q / correction


def _exact_pvalue(ranks: np.ndarray) -> float:
    """P(sum of squared rank sums >= observed) over all (k!)^b within-block
    permutations, accumulated block by block on the rank-sum vectors."""
    doubled = np.rint(ranks * 2).astype(np.int64)
    observed = int((doubled.sum(axis=0) ** 2).sum())
    k = doubled.shape[1]
    # rank sums add up to a known total, so the last coordinate is implied
    dist: Counter = Counter({(0,) * (k - 1): 1})
    for row in doubled:
        perms = Counter(p[:-1] for p in itertools.permutations(row.tolist()))
        nxt: Counter = Counter()
        for sums, c in dist.items():
            for p, m in perms.items():
                nxt[tuple(s + x for s, x in zip(sums, p))] += c * m
        dist = nxt
    grand = int(doubled.sum())
    total = math.factorial(k) ** doubled.shape[0]
    hits = sum(c for sums, c in dist.items()
               if sum(s * s for s in sums) + (grand - sum(sums)) ** 2 >= observed)
    return hits / total


def _monte_carlo_pvalue(ranks: np.ndarray, n_resamples: int, seed: int | None,
                        chunk: int = 2000) -> float:
    rng = np.random.default_rng(seed)
    b, k = ranks.shape
    observed = (ranks.sum(axis=0) ** 2).sum()
    hits = done = 0
    while done < n_resamples:
        m = min(chunk, n_resamples - done)
        order = np.argsort(rng.random((m, b, k)), axis=2)
        shuffled = np.take_along_axis(np.broadcast_to(ranks, (m, b, k)), order, axis=2)
        ss = (shuffled.sum(axis=1) ** 2).sum(axis=1)
        hits += int((ss >= observed - 1e-9).sum())
        done += m
    return (hits + 1) / (n_resamples + 1)


def friedman(matrix: LapeMatrix, method: FriedmanMethod = "auto",
             exact_limit: int = EXACT_LIMIT, n_resamples: int = 10000,
             seed: int | None = 0) -> FriedmanResult:
    """Friedman rank test across treatments, blocks as repeated measures.

    Incomplete blocks are dropped first. ``auto`` enumerates the exact
    permutation distribution when ``(k!)**b <= exact_limit`` and otherwise
    uses the chi-square approximation with ``k - 1`` degrees of freedom.
    """
    m = matrix.complete()
    b, k = m.values.shape
    if k < 2:
        raise InsufficientDataError(f"need at least 2 treatments, have {k}")
    if b < 2:
        raise InsufficientDataError(f"need at least 2 complete blocks, have {b}")
    ranks = _block_ranks(m.values)
    rank_sums = ranks.sum(axis=0)
    correction = _tie_correction(ranks)
    if correction <= 0:
        # every block fully tied
        return FriedmanResult(0.0, k, b, 1.0, "chi-square-approx" if method == "auto" else method,
                              1.0, m.excluded, tuple(rank_sums.tolist()))
    q = _q_from_rank_sums(float((rank_sums ** 2).sum()), b, k, correction)
    q = max(q, 0.0)
    p_chi2 = float(sps.chi2.sf(q, k - 1))

    if method == "auto":
        method = ("exact-permutation" if math.factorial(k) ** b <= exact_limit
                  else "chi-square-approx")
    if method == "exact-permutation":
        p = _exact_pvalue(ranks)
    elif method == "monte-carlo":
        p = _monte_carlo_pvalue(ranks, n_resamples, seed)
    elif method == "chi-square-approx":
        p = p_chi2
    else:
        raise ValueError(f"unknown Friedman method {method!r}")
    return FriedmanResult(q, k, b, min(max(p, 0.0), 1.0), method, p_chi2, m.excluded,
                          tuple(rank_sums.tolist()))


@dataclass(frozen=True)
class PairComparison:
    a: Hashable
    b: Hashable
    mean_rank_a: float
    mean_rank_b: float
    statistic: float
    p_adjusted: float
    significant: bool


@dataclass(frozen=True)
class PosthocResult:
    method: str
    alpha: float
    omnibus: FriedmanResult
    pairs: tuple[PairComparison, ...] = ()
    elevated: tuple[Hashable, ...] = ()
    note: str = ""


def _holm(pvalues: Sequence[float]) -> list[float]:
    order = sorted(range(len(pvalues)), key=lambda i: pvalues[i])
    adjusted = [0.0] * len(pvalues)
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (len(pvalues) - rank) * pvalues[i]))
        adjusted[i] = running
    return adjusted


def posthoc(matrix: LapeMatrix, alpha: float = 0.05,
            method: Literal["nemenyi", "wilcoxon-holm"] = "nemenyi",
            omnibus: FriedmanResult | None = None) -> PosthocResult:
    """All-pairs comparisons after a rejecting Friedman test.

    A treatment is marked elevated when it takes part in at least one
    significant pair and ranks higher in every significant pair it is in.
    """
    omnibus = omnibus or friedman(matrix)
    if omnibus.p_value >= alpha:
        return PosthocResult(method, alpha, omnibus,
                             note=f"omnibus p={omnibus.p_value:.4g} not below alpha={alpha}")
    m = matrix.complete()
    b, k = m.values.shape
    ranks = _block_ranks(m.values)
    mean_ranks = ranks.mean(axis=0)
    pairs_idx = list(itertools.combinations(range(k), 2))

    if method == "nemenyi":
        se = math.sqrt(k * (k + 1) / (6.0 * b))
        stats_ = [abs(mean_ranks[i] - mean_ranks[j]) / se for i, j in pairs_idx]
        padj = [float(sps.studentized_range.sf(z * math.sqrt(2), k, np.inf)) for z in stats_]
    elif method == "wilcoxon-holm":
        stats_, raw = [], []
        for i, j in pairs_idx:
            d = m.values[:, i] - m.values[:, j]
            if np.all(d == 0):
                stats_.append(0.0)
                raw.append(1.0)
                continue
            res = sps.wilcoxon(m.values[:, i], m.values[:, j])
            stats_.append(float(res.statistic))
            raw.append(float(res.pvalue))
        padj = _holm(raw)
    else:
        raise ValueError(f"unknown post-hoc method {method!r}")

    t = m.treatments
    pairs = tuple(
        PairComparison(t[i], t[j], float(mean_ranks[i]), float(mean_ranks[j]),
                       float(s), min(max(p, 0.0), 1.0), p < alpha)
        for (i, j), s, p in zip(pairs_idx, stats_, padj))
    elevated = []
    for idx, name in enumerate(t):
        sig = [pc for (i, j), pc in zip(pairs_idx, pairs) if pc.significant and idx in (i, j)]
        if sig and all((pc.mean_rank_a > pc.mean_rank_b) == (pc.a == name) for pc in sig):
            elevated.append(name)
    return PosthocResult(method, alpha, omnibus, pairs, tuple(elevated))


@dataclass(frozen=True)
class BinomialTestResult:
    successes: int
    trials: int
    p0: float
    p_value: float

    @property
    def significant_at_5pct(self) -> bool:
        return self.p_value < 0.05


def binomial_coverage(k_inside: int, n: int, p0: float = 0.95) -> BinomialTestResult:
    """Lower-tailed exact test of observed coverage against nominal ``p0``."""
    if not 0 <= k_inside <= n:
        raise DomainError(f"need 0 <= k <= n, got k={k_inside}, n={n}")
    if not 0 < p0 < 1:
        raise DomainError(f"p0 must lie in (0, 1), got {p0}")
    lp, lq = math.log(p0), math.log1p(-p0)
    lgn = math.lgamma(n + 1)
    terms = (math.exp(lgn - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq)
             for i in range(k_inside + 1))
    p = 1.0 if k_inside == n else min(math.fsum(terms), 1.0)
    return BinomialTestResult(k_inside, n, p0, p)


@dataclass(frozen=True)
class ScatterFit:
    slope: float
    intercept: float
    r_squared: float
    n: int
    subset: str
    target_date: date | None = None
    points: tuple[tuple[str, float, float], ...] = field(default=(), repr=False)


def error_scatter_fit(one_step: Iterable[AlignedPrediction],
                      two_step: Iterable[AlignedPrediction],
                      subset: CoverageClass | Literal["all"] = "all") -> ScatterFit:
    """OLS of the 1-step error on the 2-step error for a single target date.

    Locations are kept when present at both horizons and, unless ``subset`` is
    ``"all"``, when their 1-step interval outcome matches ``subset``.
    """
    one = {r.location: r for r in one_step}
    two = {r.location: r for r in two_step}
    days = {r.target_date for r in one.values()} | {r.target_date for r in two.values()}
    if len(days) > 1:
        raise DomainError(f"records span several target dates: {sorted(days)}")
    if subset != "all":
        subset = CoverageClass(subset)
    pts = []
    for loc in sorted(one.keys() & two.keys()):
        if subset != "all" and one[loc].coverage != subset:
            continue
        pts.append((loc, two[loc].error, one[loc].error))
    label = subset.value if isinstance(subset, CoverageClass) else "all"
    n = len(pts)
    if n < 3:
        raise InsufficientDataError(f"subset {label!r} has {n} locations; need at least 3")
    x = np.array([p[1] for p in pts])
    y = np.array([p[2] for p in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    syy = float(((y - ym) ** 2).sum())
    if sxx == 0 or syy == 0:
        raise InsufficientDataError(f"subset {label!r} has no variation to fit")
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    r2 = 1.0 - float((resid ** 2).sum()) / syy
    return ScatterFit(slope, intercept, min(max(r2, 0.0), 1.0), n, label,
                      next(iter(days)), tuple(pts))
