"""Anomaly detection over merged series.

Three detectors:

* rolling — deviation from a trailing rolling mean/std window;
* baseline — residuals against a quantile-regression-forest prediction
  from context features;
* distribution — Kullback-Leibler divergence between kernel density
  estimates of adjacent time segments.

All detectors reduce outliers to disjoint, sorted
:class:`AnomalyRegion` values; :func:`fleet_count` aggregates regions
across interfaces into a per-bucket concurrent-anomaly count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import qrf
from .errors import TooFewPoints
from .merge import Instance
from .timeutil import NS_PER_MIN, NS_PER_SEC

logger = logging.getLogger(__name__)

DIRECTION_ABOVE = "above"
DIRECTION_BELOW = "below"
DIRECTION_SHIFT = "shift"


@dataclass(frozen=True)
class RollingParams:
    window: int = 5 * NS_PER_MIN
    k_sigma: float = 3.0
    min_cluster: int = 5
    max_gap: int = 60 * NS_PER_SEC
    sigma_floor: float = 1e-9

    def __post_init__(self):
        if self.window <= 0 or self.max_gap <= 0:
            raise ValueError("window and max_gap must be positive")
        if self.k_sigma <= 0:
            raise ValueError("k_sigma must be positive")
        if self.min_cluster < 1:
            raise ValueError("min_cluster must be >= 1")


@dataclass(frozen=True)
class BaselineParams:
    features: tuple[str, ...] = ()
    quantile: float | None = None  # default 0.10 lower-is-better, 0.90 otherwise
    residual_quantile: float = 0.99
    min_cluster: int = 5
    max_gap: int = 60 * NS_PER_SEC
    forest: qrf.ForestParams = field(default_factory=qrf.ForestParams)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features:
            raise ValueError("baseline context feature list must be nonempty")
        if self.quantile is not None and not 0 < self.quantile < 1:
            raise ValueError("quantile must be in (0, 1)")
        if not 0 < self.residual_quantile < 1:
            raise ValueError("residual_quantile must be in (0, 1)")
        if self.min_cluster < 1 or self.max_gap <= 0:
            raise ValueError("min_cluster >= 1 and max_gap > 0 required")


@dataclass(frozen=True)
class DistParams:
    segment: int = 15 * NS_PER_MIN
    kl_threshold: float = 0.5
    grid_points: int = 512
    density_floor: float = 1e-12
    min_segment_points: int = 10

    def __post_init__(self):
        if self.segment <= 0:
            raise ValueError("segment must be positive")
        if self.kl_threshold < 0:
            raise ValueError("kl_threshold must be >= 0")
        if self.grid_points < 16:
            raise ValueError("grid_points must be >= 16")


@dataclass(frozen=True)
class AnomalyRegion:
    start_ts: int
    end_ts: int
    detector: str  # rolling | baseline | distribution
    params: dict
    outlier_ts: tuple[int, ...]
    score: float
    direction: str  # above | below | shift

    def __post_init__(self):
        if self.start_ts > self.end_ts:
            raise ValueError("region start after end")
        object.__setattr__(self, "outlier_ts", tuple(self.outlier_ts))

    def overlaps(self, lo: int, hi: int) -> bool:
        """Inclusive-region overlap with the half-open interval [lo, hi)."""
        return self.start_ts < hi and self.end_ts >= lo


def _params_snapshot(p) -> dict:
    snap = asdict(p)
    if "forest" in snap:
        snap["forest"] = {k: v for k, v in snap["forest"].items()}
    return snap


def _clusters(outlier_idx: np.ndarray, ts: np.ndarray, max_gap: int,
              min_cluster: int) -> list[np.ndarray]:
    """Group outlier indices whose inter-arrival times stay within max_gap."""
    if outlier_idx.size == 0:
        return []
    t = ts[outlier_idx]
    breaks = np.nonzero(np.diff(t) > max_gap)[0] + 1
    groups = np.split(outlier_idx, breaks)
    return [g for g in groups if g.size >= min_cluster]


def _direction(values: np.ndarray, reference: np.ndarray) -> str:
    above = float(np.mean(values > reference))
    if above >= 0.75:
        return DIRECTION_ABOVE
    if above <= 0.25:
        return DIRECTION_BELOW
    return DIRECTION_SHIFT


def rolling_stats(ts: np.ndarray, x: np.ndarray, window: int):
    """Trailing mean/std over (t - window, t), excluding the point at t.

    Windows with fewer than 2 points yield NaN for both statistics.
    Returns (mu, sigma, n_in_window).
    """
    n = len(ts)
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    c2 = np.concatenate([[0.0], np.cumsum(x * x)])
    lo = np.searchsorted(ts, ts - window, side="right")
    hi = np.arange(n)  # exclusive of the current point
    cnt = hi - lo
    with np.errstate(invalid="ignore", divide="ignore"):
        s = c1[hi] - c1[lo]
        s2 = c2[hi] - c2[lo]
        mu = np.where(cnt > 0, s / np.maximum(cnt, 1), np.nan)
        var = np.where(cnt > 0, s2 / np.maximum(cnt, 1) - mu * mu, np.nan)
        sigma = np.sqrt(np.maximum(var, 0.0))
    mu[cnt < 2] = np.nan
    sigma[cnt < 2] = np.nan
    return mu, sigma, cnt


def detect_rolling(series, p: RollingParams = RollingParams()) -> list[AnomalyRegion]:
    """Flag points k_sigma rolling standard deviations from the rolling mean.

    ``series`` is a sorted sequence of (ts, value) pairs (or parallel
    arrays).  Consecutive outliers within max_gap form clusters; clusters
    of at least min_cluster points become regions.
    """
    ts, x = _as_arrays(series)
    if len(ts) < 3:
        raise TooFewPoints(f"{len(ts)} points, need >= 3")
    if np.any(np.diff(ts) < 0):
        raise ValueError("series must be sorted by timestamp")
    mu, sigma, _ = rolling_stats(ts, x, p.window)
    sigma_eff = np.maximum(sigma, p.sigma_floor)
    with np.errstate(invalid="ignore"):
        deviation = np.abs(x - mu)
        is_outlier = deviation > p.k_sigma * sigma_eff
    is_outlier &= ~np.isnan(mu)
    outlier_idx = np.nonzero(is_outlier)[0]
    regions = []
    snapshot = _params_snapshot(p)
    for cluster in _clusters(outlier_idx, ts, p.max_gap, p.min_cluster):
        norm_dev = deviation[cluster] / sigma_eff[cluster]
        regions.append(AnomalyRegion(
            start_ts=int(ts[cluster[0]]), end_ts=int(ts[cluster[-1]]),
            detector="rolling", params=snapshot,
            outlier_ts=tuple(int(t) for t in ts[cluster]),
            score=float(np.mean(norm_dev)),
            direction=_direction(x[cluster], mu[cluster])))
    return regions


def _as_arrays(series):
    if isinstance(series, tuple) and len(series) == 2 and not np.isscalar(series[0]):
        ts, x = series
    else:
        pairs = list(series)
        ts = [t for t, _ in pairs]
        x = [v for _, v in pairs]
    ts = np.asarray(ts, dtype=np.int64)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("series values must be finite")
    return ts, x


@dataclass(frozen=True)
class BaselineResult:
    regions: list[AnomalyRegion]
    baseline: list[tuple[int, float]]
    skipped_ts: tuple[int, ...] = ()  # eval instances with null context/target
    threshold: float = 0.0
    warning: str | None = None


def detect_baseline(train: list[Instance], eval: list[Instance], target: str,
                    p: BaselineParams, orientation: str = "lower_is_better",
                    n_jobs: int = 1) -> BaselineResult:
    """Flag points that disagree with a QRF-predicted conditional baseline.

    The baseline is the conditional ``quantile`` of the target given the
    context features (an optimistic best-performance band).  Residuals are
    signed so that "worse than baseline" is positive; the outlier
    threshold is the ``residual_quantile`` of training residuals.
    """
    q = p.quantile if p.quantile is not None else (
        0.10 if orientation == "lower_is_better" else 0.90)
    sign = 1.0 if orientation == "lower_is_better" else -1.0

    model = qrf.fit(train, target, list(p.features), p.forest, n_jobs=n_jobs)
    usable_train = [i for i in train if i.values.get(target) is not None]
    train_pred = qrf.predict_quantiles(model, usable_train, q)
    train_actual = np.array([float(i.values[target]) for i in usable_train])
    train_resid = sign * (train_actual - train_pred)
    threshold = float(np.quantile(train_resid, p.residual_quantile))

    warning = None
    if float(np.ptp(model.targets)) == 0.0 and threshold == 0.0:
        warning = "degenerate training set: constant target, zero residual threshold"
        logger.warning(warning)
        return BaselineResult([], [], threshold=threshold, warning=warning)

    kept, skipped = [], []
    for inst in eval:
        if inst.values.get(target) is None or all(
                inst.values.get(f) is None for f in p.features):
            skipped.append(inst.ts)
        else:
            kept.append(inst)
    ts = np.array([i.ts for i in kept], dtype=np.int64)
    actual = np.array([float(i.values[target]) for i in kept])
    pred = qrf.predict_quantiles(model, kept, q)
    resid = sign * (actual - pred)
    outlier_idx = np.nonzero(resid > threshold)[0]
    regions = []
    snapshot = _params_snapshot(p)
    for cluster in _clusters(outlier_idx, ts, p.max_gap, p.min_cluster):
        score = float(np.mean(resid[cluster] / max(abs(threshold), 1e-9)))
        regions.append(AnomalyRegion(
            start_ts=int(ts[cluster[0]]), end_ts=int(ts[cluster[-1]]),
            detector="baseline", params=snapshot,
            outlier_ts=tuple(int(t) for t in ts[cluster]),
            score=score,
            direction=_direction(actual[cluster], pred[cluster])))
    return BaselineResult(regions, list(zip((int(t) for t in ts), map(float, pred))),
                          skipped_ts=tuple(skipped), threshold=threshold,
                          warning=warning)


# ---------------------------------------------------------------------------
# distribution comparison


def silverman_bandwidth(sample: np.ndarray) -> float:
    """0.9 * min(std, IQR/1.34) * n^(-1/5), guarded against zero spread."""
    n = len(sample)
    std = float(np.std(sample))
    q75, q25 = np.percentile(sample, [75, 25])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34)
    if spread <= 0:
        spread = max(std, iqr / 1.34, 1e-9)
    return 0.9 * spread * n ** (-0.2)


def kde_on_grid(sample: np.ndarray, grid: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian-kernel density of the sample evaluated on the grid."""
    z = (grid[:, None] - sample[None, :]) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=1)
    dens /= len(sample) * bandwidth * math.sqrt(2 * math.pi)
    return dens


def kl_divergence(sample_p: np.ndarray, sample_q: np.ndarray,
                  grid_points: int = 512, density_floor: float = 1e-12) -> float:
    """KL(P || Q) between KDE estimates on a shared grid.

    Both densities are floored at ``density_floor`` and renormalized on the
    grid before the divergence is accumulated, so the result is finite and
    nonnegative; KL of a sample against itself is exactly 0.
    """
    hp = silverman_bandwidth(sample_p)
    hq = silverman_bandwidth(sample_q)
    h = max(hp, hq)
    lo = min(sample_p.min(), sample_q.min()) - 3 * h
    hi = max(sample_p.max(), sample_q.max()) + 3 * h
    grid = np.linspace(lo, hi, grid_points)
    dx = grid[1] - grid[0]
    dens_p = np.maximum(kde_on_grid(sample_p, grid, hp), density_floor)
    dens_q = np.maximum(kde_on_grid(sample_q, grid, hq), density_floor)
    dens_p /= dens_p.sum() * dx
    dens_q /= dens_q.sum() * dx
    return float(np.sum(dens_p * np.log(dens_p / dens_q)) * dx)


@dataclass(frozen=True)
class SegmentComparison:
    segment_pair: tuple[int, int]  # start timestamps of the compared segments
    kl: float | None
    flagged: bool
    skipped: bool = False
    reason: str | None = None


def detect_distribution(series, p: DistParams = DistParams()) -> list[SegmentComparison]:
    """Compare adjacent fixed-duration segments by KDE Kullback-Leibler divergence.

    Pairs where either segment has fewer than ``min_segment_points``
    samples are skipped and reported, not silently dropped.
    """
    ts, x = _as_arrays(series)
    if len(ts) == 0:
        return []
    if np.any(np.diff(ts) < 0):
        raise ValueError("series must be sorted by timestamp")
    start = (int(ts[0]) // p.segment) * p.segment
    edges = np.arange(start, int(ts[-1]) + p.segment, p.segment)
    segments = []
    for lo in edges:
        mask = (ts >= lo) & (ts < lo + p.segment)
        segments.append((int(lo), x[mask]))
    results = []
    for (lo_a, a), (lo_b, b) in zip(segments, segments[1:]):
        if len(a) < p.min_segment_points or len(b) < p.min_segment_points:
            results.append(SegmentComparison(
                (lo_a, lo_b), None, False, skipped=True,
                reason=f"segment sizes {len(a)}/{len(b)} below "
                       f"{p.min_segment_points}"))
            continue
        kl = kl_divergence(a, b, p.grid_points, p.density_floor)
        results.append(SegmentComparison((lo_a, lo_b), kl, kl > p.kl_threshold))
    return results


# ---------------------------------------------------------------------------
# region interchange (CSV for files, JSON for the service)


def regions_to_csv(regions_by_interface: dict[str, list[AnomalyRegion]]) -> str:
    import csv
    import io

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["interface", "detector", "start", "end", "score",
                     "direction", "n_outliers"])
    for iface in sorted(regions_by_interface):
        for r in regions_by_interface[iface]:
            writer.writerow([iface, r.detector, r.start_ts, r.end_ts,
                             repr(r.score), r.direction, len(r.outlier_ts)])
    return out.getvalue()


def regions_from_csv(text: str) -> dict[str, list[AnomalyRegion]]:
    import csv
    import io

    reader = csv.DictReader(io.StringIO(text))
    out: dict[str, list[AnomalyRegion]] = {}
    for row in reader:
        region = AnomalyRegion(
            start_ts=int(row["start"]), end_ts=int(row["end"]),
            detector=row["detector"], params={}, outlier_ts=(),
            score=float(row["score"]), direction=row["direction"])
        out.setdefault(row["interface"], []).append(region)
    return out


def region_to_json(region: AnomalyRegion, interface: str = "") -> dict:
    return {
        "interface": interface,
        "detector": region.detector,
        "start": region.start_ts,
        "end": region.end_ts,
        "score": region.score,
        "direction": region.direction,
        "n_outliers": len(region.outlier_ts),
        "outlier_ts": list(region.outlier_ts),
        "params": region.params,
    }


# ---------------------------------------------------------------------------
# fleet aggregation


@dataclass(frozen=True)
class FleetBucket:
    bucket_start: int
    count: int
    flagged: bool


def fleet_count(regions_by_interface: dict[str, list[AnomalyRegion]], bucket: int,
                flag_sigma: float = 2.0,
                span: tuple[int, int] | None = None) -> list[FleetBucket]:
    """Count interfaces with a concurrent anomaly per time bucket.

    A bucket is flagged when its count exceeds mean + flag_sigma * std of
    the counts over the analysis span.
    """
    if bucket <= 0:
        raise ValueError("bucket must be positive")
    if span is None:
        starts = [r.start_ts for regs in regions_by_interface.values() for r in regs]
        ends = [r.end_ts for regs in regions_by_interface.values() for r in regs]
        if not starts:
            return []
        span = (min(starts), max(ends) + 1)
    lo = (span[0] // bucket) * bucket
    edges = np.arange(lo, span[1], bucket)
    counts = np.zeros(len(edges), dtype=int)
    for regions in regions_by_interface.values():
        hit = np.zeros(len(edges), dtype=bool)
        for r in regions:
            first = int(np.searchsorted(edges, r.start_ts, side="right")) - 1
            last = int(np.searchsorted(edges, r.end_ts, side="right")) - 1
            first = max(first, 0)
            for b in range(first, min(last, len(edges) - 1) + 1):
                if r.overlaps(int(edges[b]), int(edges[b]) + bucket):
                    hit[b] = True
        counts += hit
    mean = float(counts.mean()) if len(counts) else 0.0
    std = float(counts.std()) if len(counts) else 0.0
    limit = mean + flag_sigma * std
    return [FleetBucket(int(edges[i]), int(counts[i]), bool(counts[i] > limit))
            for i in range(len(edges))]
