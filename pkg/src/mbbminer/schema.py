"""Measurement schema: feature specifications and the schema document format.

A schema document is an INI-style text file with one ``[schema]`` section
naming the time/node/interface fields and one ``[feature NAME]`` section per
feature::

    [schema]
    time_field = ts
    node_field = node
    interface_field = iface

    [feature rtt]
    kind = numeric
    unit = ms
    aggregation = mean
    orientation = lower_is_better
    merge = window_mean width=60s

    [feature DeviceMode]
    kind = categorical
    merge = last_value tolerance=60s

    [feature EventType]
    kind = event
    merge = state_track start=Experiment.Started stop=Experiment.Stopped

Merge strategy clauses (see docs/schema-format.md):

* ``interpolate max_gap=<dur>``
* ``last_value tolerance=<dur>``
* ``window_mean width=<dur>``
* ``state_track start=<cat>[,<cat>...] stop=<cat>[,<cat>...]``
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .errors import SchemaError
from .timeutil import NS_PER_SEC, format_duration, parse_duration

KINDS = ("numeric", "categorical", "event")
AGGREGATIONS = ("mean", "min", "max", "mode")
ORIENTATIONS = ("lower_is_better", "higher_is_better", "none")

DEFAULT_LAST_VALUE_TOLERANCE = 60 * NS_PER_SEC
DEFAULT_INTERPOLATE_MAX_GAP = 300 * NS_PER_SEC
DEFAULT_WINDOW_MEAN_WIDTH = 60 * NS_PER_SEC


@dataclass(frozen=True)
class Interpolate:
    """Linear interpolation between bracketing observations."""
    max_gap: int = DEFAULT_INTERPOLATE_MAX_GAP

    def __post_init__(self):
        if self.max_gap <= 0:
            raise SchemaError("interpolate max_gap must be positive")


@dataclass(frozen=True)
class LastValue:
    """Nearest-backward observation within a freshness tolerance."""
    tolerance: int = DEFAULT_LAST_VALUE_TOLERANCE

    def __post_init__(self):
        if self.tolerance <= 0:
            raise SchemaError("last_value tolerance must be positive")


@dataclass(frozen=True)
class WindowMean:
    """Mean over a trailing half-open window [t - width, t)."""
    width: int = DEFAULT_WINDOW_MEAN_WIDTH

    def __post_init__(self):
        if self.width <= 0:
            raise SchemaError("window_mean width must be positive")


@dataclass(frozen=True)
class StateTrack:
    """Track an active/inactive state driven by start/stop event values."""
    start_events: frozenset[str] = frozenset()
    stop_events: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.start_events & self.stop_events:
            raise SchemaError("state_track start/stop event sets must be disjoint")


MergeStrategy = Interpolate | LastValue | WindowMean | StateTrack


def parse_merge_strategy(text: str) -> MergeStrategy:
    parts = text.split()
    if not parts:
        raise SchemaError("empty merge strategy")
    name, args = parts[0], parts[1:]
    kv: dict[str, str] = {}
    for arg in args:
        if "=" not in arg:
            raise SchemaError(f"bad merge strategy argument {arg!r}")
        key, value = arg.split("=", 1)
        kv[key] = value
    try:
        if name == "interpolate":
            strategy = Interpolate(parse_duration(kv.pop("max_gap", "300s")))
        elif name == "last_value":
            strategy = LastValue(parse_duration(kv.pop("tolerance", "60s")))
        elif name == "window_mean":
            strategy = WindowMean(parse_duration(kv.pop("width", "60s")))
        elif name == "state_track":
            start = frozenset(v for v in kv.pop("start", "").split(",") if v)
            stop = frozenset(v for v in kv.pop("stop", "").split(",") if v)
            strategy = StateTrack(start, stop)
        else:
            raise SchemaError(f"unknown merge strategy {name!r}")
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    if kv:
        raise SchemaError(f"unknown merge strategy arguments {sorted(kv)} in {text!r}")
    return strategy


def format_merge_strategy(strategy: MergeStrategy) -> str:
    if isinstance(strategy, Interpolate):
        return f"interpolate max_gap={format_duration(strategy.max_gap)}"
    if isinstance(strategy, LastValue):
        return f"last_value tolerance={format_duration(strategy.tolerance)}"
    if isinstance(strategy, WindowMean):
        return f"window_mean width={format_duration(strategy.width)}"
    if isinstance(strategy, StateTrack):
        start = ",".join(sorted(strategy.start_events))
        stop = ",".join(sorted(strategy.stop_events))
        return f"state_track start={start} stop={stop}"
    raise SchemaError(f"unknown strategy {strategy!r}")


@dataclass(frozen=True)
class FeatureSpec:
    """Declaration of one measured feature."""

    name: str
    kind: str
    unit: str = ""
    aggregation: str | None = None
    merge_strategy: MergeStrategy | None = None
    orientation: str = "none"

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be nonempty")
        if self.kind not in KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.orientation not in ORIENTATIONS:
            raise SchemaError(f"feature {self.name!r}: unknown orientation {self.orientation!r}")
        if self.aggregation is None:
            object.__setattr__(self, "aggregation",
                               "mean" if self.kind == "numeric" else "mode")
        if self.aggregation not in AGGREGATIONS:
            raise SchemaError(f"feature {self.name!r}: unknown aggregation {self.aggregation!r}")
        if self.kind == "numeric" and self.aggregation == "mode":
            raise SchemaError(f"feature {self.name!r}: numeric features aggregate by mean/min/max")
        if self.kind != "numeric" and self.aggregation != "mode":
            raise SchemaError(f"feature {self.name!r}: {self.kind} features aggregate by mode")
        if self.merge_strategy is None:
            object.__setattr__(self, "merge_strategy", LastValue())
        if self.kind != "numeric" and isinstance(self.merge_strategy, (Interpolate, WindowMean)):
            raise SchemaError(
                f"feature {self.name!r}: {type(self.merge_strategy).__name__} "
                f"requires a numeric feature")

    @property
    def is_numeric(self) -> bool:
        return self.kind == "numeric"


@dataclass(frozen=True)
class Schema:
    """Full schema: feature list plus the record identity field names."""

    features: tuple[FeatureSpec, ...]
    time_field: str = "ts"
    node_field: str = "node"
    interface_field: str = "iface"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        for f in (self.time_field, self.node_field, self.interface_field):
            if not f:
                raise SchemaError("time/node/interface field names must be nonempty")

    @property
    def by_name(self) -> dict[str, FeatureSpec]:
        return {f.name: f for f in self.features}

    def feature(self, name: str) -> FeatureSpec:
        try:
            return self.by_name[name]
        except KeyError:
            raise SchemaError(f"unknown feature {name!r}") from None


def parse_schema(text: str) -> Schema:
    """Parse a schema document (see module docstring for the grammar)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # feature option values are case sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SchemaError(f"bad schema document: {exc}") from None
    meta = cp["schema"] if cp.has_section("schema") else {}
    features = []
    for section in cp.sections():
        if not section.startswith("feature "):
            if section != "schema":
                raise SchemaError(f"unknown schema section {section!r}")
            continue
        name = section[len("feature "):].strip()
        opts = dict(cp[section])
        kind = opts.pop("kind", "numeric")
        merge_text = opts.pop("merge", None)
        spec = FeatureSpec(
            name=name,
            kind=kind,
            unit=opts.pop("unit", ""),
            aggregation=opts.pop("aggregation", None),
            merge_strategy=parse_merge_strategy(merge_text) if merge_text else None,
            orientation=opts.pop("orientation", "none"),
        )
        if opts:
            raise SchemaError(f"unknown options {sorted(opts)} for feature {name!r}")
        features.append(spec)
    if not features:
        raise SchemaError("schema declares no features")
    return Schema(
        features=tuple(features),
        time_field=meta.get("time_field", "ts"),
        node_field=meta.get("node_field", "node"),
        interface_field=meta.get("interface_field", "iface"),
    )


def dump_schema(schema: Schema) -> str:
    """Serialize a schema back to the document format (round-trips)."""
    out = io.StringIO()
    out.write("[schema]\n")
    out.write(f"time_field = {schema.time_field}\n")
    out.write(f"node_field = {schema.node_field}\n")
    out.write(f"interface_field = {schema.interface_field}\n")
    for f in schema.features:
        out.write(f"\n[feature {f.name}]\n")
        out.write(f"kind = {f.kind}\n")
        if f.unit:
            out.write(f"unit = {f.unit}\n")
        out.write(f"aggregation = {f.aggregation}\n")
        out.write(f"merge = {format_merge_strategy(f.merge_strategy)}\n")
        if f.orientation != "none":
            out.write(f"orientation = {f.orientation}\n")
    return out.getvalue()


def default_monroe_schema() -> Schema:
    """The schema shipped as a starting point for MONROE-like logs.

    Covers the commonly present ping/radio/GPS fields; callers normally
    supply their own document instead.
    """
    return Schema(features=(
        FeatureSpec("RTT", "numeric", unit="ms", aggregation="mean",
                    merge_strategy=WindowMean(), orientation="lower_is_better"),
        FeatureSpec("RSSI", "numeric", unit="dBm", merge_strategy=LastValue()),
        FeatureSpec("RSRQ", "numeric", unit="dB", merge_strategy=LastValue()),
        FeatureSpec("RSRP", "numeric", unit="dBm", merge_strategy=LastValue()),
        FeatureSpec("DeviceMode", "categorical", merge_strategy=LastValue()),
        FeatureSpec("CID", "categorical", merge_strategy=LastValue()),
        FeatureSpec("Frequency", "numeric", unit="MHz", merge_strategy=LastValue()),
        FeatureSpec("Operator", "categorical", merge_strategy=LastValue()),
        FeatureSpec("EventType", "event",
                    merge_strategy=StateTrack(frozenset({"Scheduling.Task.Started"}),
                                              frozenset({"Scheduling.Task.Stopped"}))),
        FeatureSpec("Latitude", "numeric", unit="deg", merge_strategy=Interpolate()),
        FeatureSpec("Longitude", "numeric", unit="deg", merge_strategy=Interpolate()),
    ))
