"""Explain labeled anomalous regions by feature-value enrichment.

The workhorse is the hypergeometric upper-tail test: for a feature-value
subset matching n of N instances, k of them anomalous out of K total
anomalous, it scores how surprising the concentration is.  Fold
enrichment is (k/n)/(K/N).  Benjamini-Hochberg q-values control the false
discovery rate across all tested subsets; a permutation test and Welch's
t-test are available as complementary evidence.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from .errors import (DegenerateGroups, InvalidCounts, InvalidR,
                     NoAnomalousInstances)
from .merge import Instance

LABEL_ANOMALOUS = "anomalous"
LABEL_REGULAR = "regular"

NULL_CATEGORY = "<null>"


@dataclass(frozen=True)
class LabeledDataset:
    """Instances with binary regular/anomalous labels."""

    instances: tuple[Instance, ...]

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        for inst in self.instances:
            if inst.label not in (LABEL_ANOMALOUS, LABEL_REGULAR):
                raise ValueError(f"instance at {inst.ts} lacks a binary label")

    @property
    def N(self) -> int:
        return len(self.instances)

    @property
    def K(self) -> int:
        return sum(1 for i in self.instances if i.label == LABEL_ANOMALOUS)

    @property
    def labels(self) -> np.ndarray:
        return np.array([i.label == LABEL_ANOMALOUS for i in self.instances])


@dataclass(frozen=True)
class EnrichmentRow:
    subset: tuple[tuple[str, str], ...]  # ((feature, value), ...)
    n: int
    k: int
    enrichment: float
    p_value: float
    q_value: float

    def describe(self) -> str:
        return " & ".join(f"{f}={v}" for f, v in self.subset)


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def hypergeom_tail(N: int, K: int, n: int, k: int) -> float:
    """P(X >= k) for X ~ Hypergeometric(N, K, n), in log space.

    Safe for populations up to ~1e7 (log-gamma, no factorial overflow).
    """
    for name, v in (("N", N), ("K", K), ("n", n), ("k", k)):
        if v < 0 or v != int(v):
            raise InvalidCounts(f"{name} must be a nonnegative integer, got {v!r}")
    if n > N or K > N:
        raise InvalidCounts(f"need n <= N and K <= N, got N={N} K={K} n={n} k={k}")
    if k == 0:
        return 1.0
    if k > min(n, K):  # more marked draws than possible
        return 0.0
    denom = _log_comb(N, n)
    terms = []
    for i in range(k, min(n, K) + 1):
        if n - i > N - K:
            continue
        terms.append(_log_comb(K, i) + _log_comb(N - K, n - i) - denom)
    if not terms:
        return 0.0
    peak = max(terms)
    total = sum(math.exp(t - peak) for t in terms)
    return float(min(1.0, math.exp(peak) * total))


def benjamini_hochberg(p_values) -> np.ndarray:
    """BH step-up adjusted q-values (monotone in the sorted p-values)."""
    p = np.asarray(p_values, dtype=float)
    m = len(p)
    if m == 0:
        return p.copy()
    order = np.argsort(p, kind="mergesort")
    ranked = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(ranked[::-1])[::-1]
    q = np.empty(m)
    q[order] = np.minimum(adjusted, 1.0)
    return q


def discretize_quartiles(values: list[float | None]) -> list[str]:
    """Equal-frequency quartile labels; nulls become their own category."""
    present = np.array([v for v in values if v is not None], dtype=float)
    if present.size == 0:
        return [NULL_CATEGORY] * len(values)
    edges = np.quantile(present, [0.25, 0.5, 0.75])
    labels = []
    for v in values:
        if v is None:
            labels.append(NULL_CATEGORY)
        else:
            bin_idx = int(np.searchsorted(edges, v, side="right"))
            labels.append(f"q{bin_idx + 1}")
    return labels


def _categorize(data: LabeledDataset, features: list[str],
                discretization: str) -> dict[str, list[str]]:
    columns: dict[str, list[str]] = {}
    for name in features:
        raw = [inst.values.get(name) for inst in data.instances]
        numeric = any(isinstance(v, (int, float)) for v in raw) and not any(
            isinstance(v, str) for v in raw)
        if numeric and discretization == "quartile":
            columns[name] = discretize_quartiles(raw)
        else:
            columns[name] = [NULL_CATEGORY if v is None else str(v) for v in raw]
    return columns


def significant_groups(data: LabeledDataset, features: list[str] | None = None,
                       max_subset_size: int = 2, discretization: str = "quartile",
                       top_m: int = 50) -> list[EnrichmentRow]:
    """Rank feature-value subsets by hypergeometric enrichment.

    Singletons are enumerated exhaustively; when max_subset_size is 2,
    pairs are formed among the top_m singletons by p-value.  q-values are
    Benjamini-Hochberg over every tested subset.  Output is sorted by
    (p ascending, enrichment descending) and is invariant under input
    instance order.
    """
    N, K = data.N, data.K
    if K < 1:
        raise NoAnomalousInstances("dataset has no anomalous instances")
    if N <= K:
        raise ValueError("dataset must contain regular instances")
    if features is None:
        features = sorted({n for inst in data.instances for n in inst.values})
    columns = _categorize(data, features, discretization)
    labels = data.labels
    masks: dict[tuple[tuple[str, str], ...], np.ndarray] = {}
    for name, col in columns.items():
        arr = np.array(col, dtype=object)
        for value in sorted(set(col)):
            masks[((name, value),)] = arr == value

    def row_for(subset, mask):
        n = int(mask.sum())
        if n == 0:
            return None
        k = int((mask & labels).sum())
        enrichment = (k / n) / (K / N)
        p = hypergeom_tail(N, K, n, k)
        return (subset, n, k, enrichment, p)

    rows = [r for r in (row_for(s, m) for s, m in masks.items()) if r is not None]
    if max_subset_size >= 2:
        singles = sorted(rows, key=lambda r: (r[4], -r[3], r[0]))[:top_m]
        for i in range(len(singles)):
            for j in range(i + 1, len(singles)):
                (fa, va), = singles[i][0]
                (fb, vb), = singles[j][0]
                if fa == fb:
                    continue  # conjunctions within one feature are empty or redundant
                subset = tuple(sorted([(fa, va), (fb, vb)]))
                if subset in masks:
                    continue
                mask = masks[((fa, va),)] & masks[((fb, vb),)]
                masks[subset] = mask
                r = row_for(subset, mask)
                if r is not None:
                    rows.append(r)
    q = benjamini_hochberg([r[4] for r in rows])
    out = [EnrichmentRow(subset=r[0], n=r[1], k=r[2], enrichment=r[3],
                         p_value=r[4], q_value=float(qi))
           for r, qi in zip(rows, q)]
    out.sort(key=lambda r: (r.p_value, -r.enrichment, r.subset))
    return out


def subset_mask(data: LabeledDataset, subset, discretization: str = "quartile") -> np.ndarray:
    """Boolean match mask for a ((feature, value), ...) subset."""
    columns = _categorize(data, sorted({f for f, _ in subset}), discretization)
    mask = np.ones(data.N, dtype=bool)
    for feature, value in subset:
        mask &= np.array(columns[feature], dtype=object) == value
    return mask


def permutation_test(data: LabeledDataset, subset, R: int = 1000,
                     seed: int = 0, discretization: str = "quartile") -> float:
    """Permutation p-value for a subset's enrichment statistic.

    p = (1 + #{permuted enrichment >= observed}) / (R + 1); always at
    least 1/(R+1).
    """
    if R < 1:
        raise InvalidR(f"R must be >= 1, got {R}")
    N, K = data.N, data.K
    if K < 1:
        raise NoAnomalousInstances("dataset has no anomalous instances")
    mask = subset_mask(data, subset, discretization)
    n = int(mask.sum())
    if n == 0:
        return 1.0
    labels = data.labels
    observed = (int((mask & labels).sum()) / n) / (K / N)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(R):
        perm = rng.permutation(labels)
        stat = (int((mask & perm).sum()) / n) / (K / N)
        if stat >= observed - 1e-12:
            hits += 1
    return (1 + hits) / (R + 1)


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float


def welch_t_test(data: LabeledDataset, feature: str) -> TTestResult:
    """Welch's unequal-variance t-test between label groups on one feature."""
    a = np.array([float(i.values[feature]) for i in data.instances
                  if i.label == LABEL_ANOMALOUS and i.values.get(feature) is not None])
    b = np.array([float(i.values[feature]) for i in data.instances
                  if i.label == LABEL_REGULAR and i.values.get(feature) is not None])
    if len(a) < 2 or len(b) < 2:
        raise DegenerateGroups("both groups need >= 2 non-null values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0 and vb == 0:
        if a.mean() == b.mean():
            return TTestResult(0.0, float(len(a) + len(b) - 2), 1.0)
        t = math.inf if a.mean() > b.mean() else -math.inf
        return TTestResult(t, float(len(a) + len(b) - 2), 0.0)
    sea, seb = va / len(a), vb / len(b)
    t = float((a.mean() - b.mean()) / math.sqrt(sea + seb))
    df = float((sea + seb) ** 2 / (sea ** 2 / (len(a) - 1) + seb ** 2 / (len(b) - 1)))
    p = float(2 * sstats.t.sf(abs(t), df))
    return TTestResult(t, df, p)


# ---------------------------------------------------------------------------
# labeling + export helpers


def label_instances(instances: list[Instance], regions) -> LabeledDataset:
    """Label instances anomalous when their ts falls in any region."""
    labeled = []
    for inst in instances:
        anomalous = any(r.start_ts <= inst.ts <= r.end_ts for r in regions)
        labeled.append(inst.with_label(LABEL_ANOMALOUS if anomalous else LABEL_REGULAR))
    return LabeledDataset(tuple(labeled))


def enrichment_to_csv(rows: list[EnrichmentRow]) -> str:
    """Export the enrichment table (subset, count, count class, enrichment, p, q)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["subset", "count", "count_class", "enrichment", "p_value", "q_value"])
    for r in rows:
        writer.writerow([r.describe(), r.n, r.k, repr(r.enrichment),
                         repr(r.p_value), repr(r.q_value)])
    return out.getvalue()
