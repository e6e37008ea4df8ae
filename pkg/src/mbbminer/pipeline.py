"""Shared orchestration used by both the CLI and the HTTP service.

Keeping detection and explanation here guarantees the two entry points
return value-identical results for the same inputs.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import detect, rootcause
from .merge import Instance
from .merge import merge as merge_streams
from .store import SeriesStore
from .timeutil import NS_PER_SEC


def target_series(store: SeriesStore, node: str, iface: str, feature: str,
                  t0: int, t1: int):
    """Base-granularity (ts, value) arrays for one feature in a range."""
    buckets = store.read_partition(node, iface, feature, store.ladder.base,
                                   missing_ok=True)
    pairs = [(b.start_ts, b.value) for b in buckets if t0 <= b.start_ts < t1]
    ts = np.array([p[0] for p in pairs], dtype=np.int64)
    x = np.array([p[1] for p in pairs], dtype=float)
    return ts, x


def merged_instances(store: SeriesStore, node: str, iface: str,
                     features: list[str], t0: int, t1: int,
                     step: int = NS_PER_SEC) -> list[Instance]:
    """Merge the named features onto a fixed-step axis using schema strategies."""
    streams = {}
    for feature in features:
        buckets = store.read_partition(node, iface, feature, store.ladder.base,
                                       missing_ok=True)
        streams[feature] = [b for b in buckets if b.start_ts < t1]
    strategies = {f: store.schema.feature(f).merge_strategy for f in features}
    sub = replace(store.schema, features=tuple(
        f for f in store.schema.features if f.name in features))
    return merge_streams(streams, (t0, t1, step), strategies, schema=sub,
                       node_id=node, interface_id=iface)


def run_detect(store: SeriesStore, method: str, node: str, iface: str,
               target: str, t0: int, t1: int, *,
               rolling: detect.RollingParams | None = None,
               baseline: detect.BaselineParams | None = None,
               dist: detect.DistParams | None = None,
               train_range: tuple[int, int] | None = None,
               step: int = NS_PER_SEC, n_jobs: int = 1):
    """Run one detector over a store range.

    Returns ``(regions, extra)`` where extra is method-specific (baseline
    series for the baseline detector, segment comparisons for the
    distribution detector).
    """
    if method == "rolling":
        ts, x = target_series(store, node, iface, target, t0, t1)
        regions = detect.detect_rolling((ts, x), rolling or detect.RollingParams())
        return regions, None
    if method == "baseline":
        p = baseline
        if p is None:
            raise ValueError("baseline detection needs BaselineParams")
        features = [target] + list(p.features)
        lo = min(t0, train_range[0]) if train_range else t0
        hi = max(t1, train_range[1]) if train_range else t1
        instances = merged_instances(store, node, iface, features, lo, hi, step)
        if train_range:
            train = [i for i in instances if train_range[0] <= i.ts < train_range[1]]
        else:
            train = [i for i in instances if t0 <= i.ts < t1]
        evaluate = [i for i in instances if t0 <= i.ts < t1]
        orientation = store.schema.feature(target).orientation
        if orientation == "none":
            orientation = "lower_is_better"
        result = detect.detect_baseline(train, evaluate, target, p,
                                        orientation=orientation, n_jobs=n_jobs)
        return result.regions, result
    if method == "distribution":
        ts, x = target_series(store, node, iface, target, t0, t1)
        comparisons = detect.detect_distribution((ts, x), dist or detect.DistParams())
        return [], comparisons
    raise ValueError(f"unknown detector {method!r}")


def run_explain(instances: list[Instance], regions, features: list[str] | None,
                max_subset_size: int = 2, top_m: int = 50,
                discretization: str = "quartile") -> list[rootcause.EnrichmentRow]:
    """Label instances by regions (when labels are absent) and rank subsets."""
    if regions:
        data = rootcause.label_instances(instances, regions)
    else:
        data = rootcause.LabeledDataset(tuple(
            i if i.label else i.with_label(rootcause.LABEL_REGULAR)
            for i in instances))
    return rootcause.significant_groups(data, features=features,
                                        max_subset_size=max_subset_size,
                                        discretization=discretization,
                                        top_m=top_m)
