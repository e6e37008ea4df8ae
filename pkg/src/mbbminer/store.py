"""Multi-resolution, type-aware time-series storage.

A store is a directory::

    store/
      manifest.json     # schema pointer, ladder, partition index
      schema.cfg        # schema document
      parts/*.tsv       # one sorted partition per (node, iface, feature, level)

Every series is materialized at each level of a granularity ladder
(default 10 ms, 1 s, 1 min, 30 min).  Buckets carry count/sum/min/max for
numeric features and a per-category count map for categorical ones, so
coarse levels are exact re-aggregations of the base level, and queries can
pick the finest level that stays under a point budget.

The on-disk encoding is documented bit-exactly in docs/store-format.md.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

from .errors import (LevelNotCoarser, MissingGeoFeatures,
                     StorageIO, UnknownKey, UnsortedInput)
from .ingest import LoadReport, MeasurementRecord
from .schema import FeatureSpec, Interpolate, Schema, dump_schema, parse_schema
from .timeutil import NS_PER_MIN, NS_PER_MS, NS_PER_SEC

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
PARTITION_MAGIC = "# mbbminer-partition v1"

DEFAULT_LEVELS = (10 * NS_PER_MS, NS_PER_SEC, NS_PER_MIN, 30 * NS_PER_MIN)


@dataclass(frozen=True)
class GranularityLadder:
    """Ordered bucket durations, each an integer multiple of the previous."""

    levels: tuple[int, ...] = DEFAULT_LEVELS

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if not self.levels:
            raise ValueError("ladder must have at least one level")
        if self.levels[0] <= 0:
            raise ValueError("ladder levels must be positive")
        for a, b in zip(self.levels, self.levels[1:]):
            if b <= a or b % a != 0:
                raise ValueError(
                    f"ladder levels must be strictly increasing multiples; {b} after {a}")

    @property
    def base(self) -> int:
        return self.levels[0]

    def choose_level(self, t0: int, t1: int, max_points: int) -> int:
        """Finest level whose expected point count (t1-t0)/level fits the budget.

        Falls back to the coarsest level when even that exceeds the budget.
        """
        if t1 <= t0:
            raise ValueError("t0 must precede t1")
        if max_points < 1:
            raise ValueError("max_points must be >= 1")
        span = t1 - t0
        for level in self.levels:
            if span <= max_points * level:
                return level
        return self.levels[-1]


@dataclass(frozen=True)
class Bucket:
    """One aggregated observation interval, labeled by its start.

    Numeric buckets carry (count, sum, min, max); categorical buckets carry
    a category->count map.  A base-level bucket built from a single raw
    observation has count 1.
    """

    start_ts: int
    value: float | str | None
    count: int = 1
    sum: float | None = None
    min: float | None = None
    max: float | None = None
    categories: dict[str, int] | None = None

    @staticmethod
    def from_numeric(start_ts: int, value: float) -> "Bucket":
        return Bucket(start_ts, value, 1, sum=value, min=value, max=value)

    @staticmethod
    def from_categorical(start_ts: int, value: str) -> "Bucket":
        return Bucket(start_ts, value, 1, categories={value: 1})


@dataclass(frozen=True)
class SeriesKey:
    node_id: str
    interface_id: str
    feature_name: str
    level: int


def _numeric_value(count: int, total: float, vmin: float, vmax: float,
                   aggregation: str) -> float:
    if aggregation == "mean":
        return total / count
    if aggregation == "min":
        return vmin
    if aggregation == "max":
        return vmax
    raise ValueError(f"bad numeric aggregation {aggregation!r}")


def _mode(categories: dict[str, int]) -> str:
    # ties break to the lexicographically smallest category (deterministic)
    best = None
    best_count = -1
    for cat in sorted(categories):
        if categories[cat] > best_count:
            best, best_count = cat, categories[cat]
    return best


def resample(buckets: list[Bucket], to_level: int, spec: FeatureSpec,
             from_level: int | None = None) -> list[Bucket]:
    """Re-aggregate sorted buckets at a finer level into ``to_level`` buckets.

    Aggregation uses the carried (count, sum, min, max) or category counts,
    so the result is exactly what a flat recomputation from raw
    observations would give.  Empty intervals produce no bucket.
    """
    if from_level is not None:
        if to_level < from_level or to_level % from_level != 0:
            raise LevelNotCoarser(
                f"target level {to_level} is not a coarser multiple of {from_level}")
    out: list[Bucket] = []
    prev_ts = None
    cur_start = None
    count = 0
    total = 0.0
    vmin = vmax = 0.0
    cats: dict[str, int] = {}

    def flush():
        if cur_start is None:
            return
        if spec.is_numeric:
            out.append(Bucket(cur_start, _numeric_value(count, total, vmin, vmax,
                                                        spec.aggregation),
                              count, sum=total, min=vmin, max=vmax))
        else:
            out.append(Bucket(cur_start, _mode(cats), count, categories=dict(cats)))

    for b in buckets:
        if prev_ts is not None and b.start_ts < prev_ts:
            raise UnsortedInput(f"bucket at {b.start_ts} after {prev_ts}")
        prev_ts = b.start_ts
        start = (b.start_ts // to_level) * to_level
        if start != cur_start:
            flush()
            cur_start = start
            count = 0
            total = 0.0
            cats = {}
            if spec.is_numeric:
                vmin = b.min if b.min is not None else b.value
                vmax = b.max if b.max is not None else b.value
        if spec.is_numeric:
            bmin = b.min if b.min is not None else b.value
            bmax = b.max if b.max is not None else b.value
            bsum = b.sum if b.sum is not None else b.value * b.count
            vmin = min(vmin, bmin)
            vmax = max(vmax, bmax)
            total += bsum
        else:
            for cat, n in (b.categories or {b.value: b.count}).items():
                cats[cat] = cats.get(cat, 0) + n
        count += b.count
    flush()
    return out


# ---------------------------------------------------------------------------
# on-disk encoding


def _encode_rows(buckets: list[Bucket], spec: FeatureSpec) -> str:
    lines = [PARTITION_MAGIC]
    if spec.is_numeric:
        lines.append("ts\tcount\tsum\tmin\tmax")
        for b in buckets:
            lines.append(f"{b.start_ts}\t{b.count}\t{b.sum!r}\t{b.min!r}\t{b.max!r}")
    else:
        lines.append("ts\tcount\tvalue\tcategories")
        for b in buckets:
            cats = json.dumps(b.categories or {b.value: b.count},
                              sort_keys=True, separators=(",", ":"))
            lines.append(f"{b.start_ts}\t{b.count}\t{json.dumps(b.value)}\t{cats}")
    return "\n".join(lines) + "\n"


def _decode_rows(text: str, spec: FeatureSpec) -> list[Bucket]:
    lines = text.splitlines()
    if not lines or lines[0] != PARTITION_MAGIC:
        raise StorageIO("bad partition header")
    buckets: list[Bucket] = []
    for line in lines[2:]:
        if not line:
            continue
        cells = line.split("\t")
        ts, count = int(cells[0]), int(cells[1])
        if spec.is_numeric:
            total, vmin, vmax = (float(cells[2]), float(cells[3]), float(cells[4]))
            buckets.append(Bucket(ts, _numeric_value(count, total, vmin, vmax,
                                                     spec.aggregation),
                                  count, sum=total, min=vmin, max=vmax))
        else:
            value = json.loads(cells[2])
            cats = json.loads(cells[3])
            buckets.append(Bucket(ts, value, count, categories=cats))
    return buckets


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageIO(f"cannot write {path}: {exc}") from None


def _part_filename(node: str, iface: str, feature: str, level: int) -> str:
    enc = lambda s: quote(s, safe="")
    return f"{enc(node)}__{enc(iface)}__{enc(feature)}__{level}.tsv"


class SeriesStore:
    """Partitioned multi-granularity storage rooted at a directory."""

    def __init__(self, path: Path, schema: Schema, ladder: GranularityLadder,
                 partitions: dict[SeriesKey, dict]):
        self.path = Path(path)
        self.schema = schema
        self.ladder = ladder
        self._partitions = partitions
        self._manifest_mtime = self._mtime()

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def create(cls, path, schema: Schema,
               ladder: GranularityLadder | None = None) -> "SeriesStore":
        path = Path(path)
        ladder = ladder or GranularityLadder()
        path.mkdir(parents=True, exist_ok=True)
        (path / "parts").mkdir(exist_ok=True)
        _atomic_write(path / "schema.cfg", dump_schema(schema))
        store = cls(path, schema, ladder, {})
        store._write_manifest()
        return store

    @classmethod
    def open(cls, path) -> "SeriesStore":
        path = Path(path)
        manifest_path = path / "manifest.json"
        if not manifest_path.exists():
            raise StorageIO(f"no store at {path} (missing manifest.json)")
        try:
            manifest = json.loads(manifest_path.read_text())
            schema = parse_schema((path / manifest["schema_file"]).read_text())
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise StorageIO(f"corrupt store at {path}: {exc}") from None
        if manifest.get("version") != MANIFEST_VERSION:
            raise StorageIO(f"unsupported manifest version {manifest.get('version')}")
        ladder = GranularityLadder(tuple(manifest["ladder"]))
        partitions = {}
        for p in manifest["partitions"]:
            key = SeriesKey(p["node"], p["iface"], p["feature"], p["level"])
            partitions[key] = p
        return cls(path, schema, ladder, partitions)

    def _mtime(self):
        try:
            return (self.path / "manifest.json").stat().st_mtime_ns
        except OSError:
            return None

    def maybe_reload(self):
        """Re-read the manifest if another process has swapped it."""
        mtime = self._mtime()
        if mtime != self._manifest_mtime:
            fresh = SeriesStore.open(self.path)
            self.schema = fresh.schema
            self.ladder = fresh.ladder
            self._partitions = fresh._partitions
            self._manifest_mtime = mtime

    def _write_manifest(self):
        manifest = {
            "version": MANIFEST_VERSION,
            "schema_file": "schema.cfg",
            "ladder": list(self.ladder.levels),
            "partitions": [self._partitions[k] for k in sorted(
                self._partitions, key=lambda k: (k.node_id, k.interface_id,
                                                 k.feature_name, k.level))],
        }
        _atomic_write(self.path / "manifest.json", json.dumps(manifest, indent=1))
        self._manifest_mtime = self._mtime()

    # -- loading -----------------------------------------------------------

    def load(self, records: list[MeasurementRecord]) -> LoadReport:
        """Append records, materializing every ladder level.

        Duplicate (ts, node, interface, feature) observations keep the
        last-loaded value; across loads the rule applies at base-bucket
        resolution.  Loading the same batch twice is a no-op.
        """
        specs = self.schema.by_name
        accepted = 0
        rejected = 0
        t_lo = t_hi = None
        # (node, iface, feature) -> {raw_ts: value}, last write wins
        pending: dict[tuple[str, str, str], dict[int, float | str]] = {}
        for rec in records:
            bad = False
            for name in rec.values:
                if name not in specs:
                    bad = True
                    break
            if bad:
                rejected += 1
                continue
            accepted += 1
            t_lo = rec.ts if t_lo is None else min(t_lo, rec.ts)
            t_hi = rec.ts if t_hi is None else max(t_hi, rec.ts)
            for name, value in rec.values.items():
                if value is None:
                    continue
                pending.setdefault((rec.node_id, rec.interface_id, name), {})[rec.ts] = value
        for (node, iface, feature), by_ts in pending.items():
            self._merge_partition(node, iface, feature, by_ts)
        if pending:
            self._write_manifest()
        extent = None if t_lo is None else (t_lo, t_hi)
        return LoadReport(accepted=accepted, rejected=rejected, time_extent=extent)

    def _merge_partition(self, node: str, iface: str, feature: str,
                         by_ts: dict[int, float | str]):
        spec = self.schema.feature(feature)
        base = self.ladder.base
        # aggregate raw observations into base buckets
        raw = [Bucket.from_numeric(ts, v) if spec.is_numeric
               else Bucket.from_categorical(ts, v)
               for ts, v in sorted(by_ts.items())]
        fresh = resample(raw, base, spec)
        existing = self.read_partition(node, iface, feature, base, missing_ok=True)
        merged = {b.start_ts: b for b in existing}
        merged.update({b.start_ts: b for b in fresh})
        buckets = [merged[ts] for ts in sorted(merged)]
        self._write_partition(node, iface, feature, base, buckets, spec)
        for level in self.ladder.levels[1:]:
            coarse = resample(buckets, level, spec, from_level=base)
            self._write_partition(node, iface, feature, level, coarse, spec)

    def _write_partition(self, node: str, iface: str, feature: str, level: int,
                         buckets: list[Bucket], spec: FeatureSpec):
        fname = _part_filename(node, iface, feature, level)
        _atomic_write(self.path / "parts" / fname, _encode_rows(buckets, spec))
        key = SeriesKey(node, iface, feature, level)
        extent = ([buckets[0].start_ts, buckets[-1].start_ts + level]
                  if buckets else None)
        self._partitions[key] = {
            "node": node, "iface": iface, "feature": feature, "level": level,
            "file": fname, "time_extent": extent, "row_count": len(buckets),
        }

    # -- reading -----------------------------------------------------------

    def read_partition(self, node: str, iface: str, feature: str, level: int,
                       missing_ok: bool = False) -> list[Bucket]:
        key = SeriesKey(node, iface, feature, level)
        entry = self._partitions.get(key)
        if entry is None:
            if missing_ok:
                return []
            raise UnknownKey(f"no partition for {key}")
        spec = self.schema.feature(feature)
        try:
            text = (self.path / "parts" / entry["file"]).read_text()
        except OSError as exc:
            raise StorageIO(f"cannot read partition {entry['file']}: {exc}") from None
        return _decode_rows(text, spec)

    def query(self, node: str, iface: str, features: list[str], t0: int, t1: int,
              max_points: int) -> tuple[int, dict[str, list[Bucket]]]:
        """Range query with automatic granularity.

        Returns ``(level, {feature: buckets})``; an empty range yields empty
        sequences, not an error.  Unknown node/interface/feature raises
        :class:`UnknownKey`.
        """
        if t1 <= t0:
            raise ValueError("t0 must precede t1")
        specs = self.schema.by_name
        for feature in features:
            if feature not in specs:
                raise UnknownKey(f"unknown feature {feature!r}")
        known = {(k.node_id, k.interface_id) for k in self._partitions}
        if known and (node, iface) not in known:
            raise UnknownKey(f"unknown node/interface {node!r}/{iface!r}")
        level = self.ladder.choose_level(t0, t1, max_points)
        result = {}
        for feature in features:
            buckets = self.read_partition(node, iface, feature, level, missing_ok=True)
            result[feature] = [b for b in buckets if t0 <= b.start_ts < t1]
        return level, result

    def geo_select(self, t0: int, t1: int, bbox: tuple[float, float, float, float],
                   features: list[str], step: int = NS_PER_SEC,
                   lat_feature: str = "Latitude", lon_feature: str = "Longitude",
                   node: str | None = None, iface: str | None = None) -> list:
        """Instances whose interpolated position falls inside a bounding box.

        ``bbox`` is (lat_min, lat_max, lon_min, lon_max); the boundary is
        inclusive.  Instances are produced by :func:`mbbminer.merge.merge`
        at base granularity on a fixed-step axis.
        """
        from .merge import merge  # local import: merge is a pure consumer of buckets

        lat_min, lat_max, lon_min, lon_max = bbox
        if lat_min > lat_max or lon_min > lon_max:
            raise ValueError("bounding box is empty")
        specs = self.schema.by_name
        if lat_feature not in specs or lon_feature not in specs:
            raise MissingGeoFeatures(
                f"schema lacks position features {lat_feature!r}/{lon_feature!r}")
        wanted = list(dict.fromkeys(list(features) + [lat_feature, lon_feature]))
        pairs = sorted({(k.node_id, k.interface_id) for k in self._partitions
                        if (node is None or k.node_id == node)
                        and (iface is None or k.interface_id == iface)})
        selected = []
        for n, i in pairs:
            streams = {}
            strategies = {}
            for feature in wanted:
                buckets = self.read_partition(n, i, feature, self.ladder.base,
                                              missing_ok=True)
                streams[feature] = [b for b in buckets if b.start_ts < t1]
                spec = specs[feature]
                strategy = spec.merge_strategy
                if feature in (lat_feature, lon_feature) and not isinstance(strategy, Interpolate):
                    strategy = Interpolate()
                strategies[feature] = strategy
            instances = merge(streams, (t0, t1, step), strategies,
                              schema=self.schema, node_id=n, interface_id=i)
            for inst in instances:
                lat = inst.values.get(lat_feature)
                lon = inst.values.get(lon_feature)
                if lat is None or lon is None:
                    continue
                if lat_min <= lat <= lat_max and lon_min <= lon <= lon_max:
                    selected.append(inst)
        return selected

    # -- introspection -----------------------------------------------------

    def summary(self) -> dict:
        """Node/interface/feature inventory with time extents."""
        nodes: dict[str, dict] = {}
        for key, entry in self._partitions.items():
            if key.level != self.ladder.base:
                continue
            iface_map = nodes.setdefault(key.node_id, {})
            info = iface_map.setdefault(key.interface_id,
                                        {"features": [], "time_extent": None})
            info["features"].append(key.feature_name)
            extent = entry["time_extent"]
            if extent:
                cur = info["time_extent"]
                info["time_extent"] = (extent if cur is None else
                                       [min(cur[0], extent[0]), max(cur[1], extent[1])])
        for iface_map in nodes.values():
            for info in iface_map.values():
                info["features"].sort()
        return nodes
