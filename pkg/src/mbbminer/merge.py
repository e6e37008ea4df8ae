"""Align asynchronous feature streams onto a common time axis.

Each output :class:`Instance` is a feature vector sampled at a fixed axis
tick.  The value of a feature at tick ``t`` depends on its merge strategy:

* ``Interpolate(max_gap)`` — linear between the bracketing observations iff
  their gap is within ``max_gap``; never extrapolates outside the observed
  hull.
* ``LastValue(tolerance)`` — most recent observation with age <= tolerance.
* ``WindowMean(width)`` — count-weighted mean over ``[t - width, t)``.
* ``StateTrack(start, stop)`` — "active"/"inactive" from the most recent
  start/stop event at or before ``t`` (initially "inactive").

A feature is null exactly when its strategy's freshness/gap condition is
violated — staleness is never silently carried forward.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field

from .errors import StrategyKindMismatch
from .schema import (Interpolate, LastValue, MergeStrategy, Schema, StateTrack,
                     WindowMean)

STATE_ACTIVE = "active"
STATE_INACTIVE = "inactive"


@dataclass(frozen=True)
class Instance:
    """A merged, time-aligned feature vector — the unit of mining."""

    ts: int
    node_id: str
    interface_id: str
    values: dict[str, float | str | None] = field(default_factory=dict)
    label: str | None = None  # "regular" | "anomalous" | None

    def with_label(self, label: str | None) -> "Instance":
        return Instance(self.ts, self.node_id, self.interface_id, self.values, label)


def _axis_ticks(t0: int, t1: int, step: int) -> list[int]:
    if step <= 0:
        raise ValueError("axis step must be positive")
    return list(range(t0, t1, step))


def _interpolate(ts: list[int], values: list[float], ticks: list[int],
                 max_gap: int) -> list[float | None]:
    out: list[float | None] = []
    for t in ticks:
        i = bisect.bisect_right(ts, t)
        if i > 0 and ts[i - 1] == t:
            out.append(values[i - 1])
            continue
        if i == 0 or i == len(ts):
            out.append(None)  # outside the observed hull
            continue
        lo, hi = ts[i - 1], ts[i]
        if hi - lo > max_gap:
            out.append(None)
            continue
        frac = (t - lo) / (hi - lo)
        out.append(values[i - 1] + frac * (values[i] - values[i - 1]))
    return out


def _last_value(ts: list[int], values: list, ticks: list[int],
                tolerance: int) -> list:
    out = []
    for t in ticks:
        i = bisect.bisect_right(ts, t)
        if i == 0 or t - ts[i - 1] > tolerance:
            out.append(None)
        else:
            out.append(values[i - 1])
    return out


def _window_mean(ts: list[int], sums: list[float], counts: list[int],
                 ticks: list[int], width: int) -> list[float | None]:
    out: list[float | None] = []
    for t in ticks:
        lo = bisect.bisect_left(ts, t - width)
        hi = bisect.bisect_left(ts, t)
        n = sum(counts[lo:hi])
        if n == 0:
            out.append(None)
        else:
            out.append(sum(sums[lo:hi]) / n)
    return out


def _state_values(ts: list[int], values: list[str], ticks: list[int],
                  spec: StateTrack) -> list[str]:
    change_ts: list[int] = []
    change_state: list[str] = []
    state = STATE_INACTIVE
    for t, v in zip(ts, values):
        if v in spec.start_events and state != STATE_ACTIVE:
            state = STATE_ACTIVE
            change_ts.append(t)
            change_state.append(state)
        elif v in spec.stop_events and state != STATE_INACTIVE:
            state = STATE_INACTIVE
            change_ts.append(t)
            change_state.append(state)
    out = []
    for t in ticks:
        i = bisect.bisect_right(change_ts, t)
        out.append(STATE_INACTIVE if i == 0 else change_state[i - 1])
    return out


def state_timeline(events, spec: StateTrack, start_ts: int = 0) -> list[tuple[int, str]]:
    """Collapse an event stream into state-change points.

    Returns ``[(ts, state), ...]`` starting with the initial inactive state
    at ``start_ts``.  Repeated starts (or stops) are idempotent; unknown
    event categories are ignored.
    """
    timeline = [(start_ts, STATE_INACTIVE)]
    state = STATE_INACTIVE
    prev = None
    for ev in events:
        ts, value = (ev.start_ts, ev.value) if hasattr(ev, "start_ts") else ev
        if prev is not None and ts < prev:
            raise ValueError(f"events unsorted at {ts}")
        prev = ts
        if value in spec.start_events and state != STATE_ACTIVE:
            state = STATE_ACTIVE
            timeline.append((ts, state))
        elif value in spec.stop_events and state != STATE_INACTIVE:
            state = STATE_INACTIVE
            timeline.append((ts, state))
    return timeline


def merge(streams: dict[str, list], axis: tuple[int, int, int],
          strategies: dict[str, MergeStrategy], schema: Schema | None = None,
          node_id: str = "", interface_id: str = "") -> list[Instance]:
    """Merge per-feature bucket sequences into one instance per axis tick.

    ``streams`` maps feature name to sorted buckets (anything exposing
    ``start_ts``/``value``/``count``/``sum``).  When a schema is given,
    every schema feature appears in each instance (null when absent), and
    strategy/kind compatibility is checked.
    """
    t0, t1, step = axis
    ticks = _axis_ticks(t0, t1, step)
    feature_names = ([f.name for f in schema.features] if schema is not None
                     else list(streams))
    columns: dict[str, list] = {}
    for name in feature_names:
        strategy = strategies.get(name)
        if strategy is None:
            strategy = schema.feature(name).merge_strategy if schema else LastValue()
        buckets = streams.get(name, [])
        ts = [b.start_ts for b in buckets]
        if any(a > b for a, b in zip(ts, ts[1:])):
            raise ValueError(f"stream {name!r} unsorted")
        values = [b.value for b in buckets]
        if schema is not None:
            kind = schema.feature(name).kind
            if kind != "numeric" and isinstance(strategy, (Interpolate, WindowMean)):
                raise StrategyKindMismatch(
                    f"{type(strategy).__name__} on {kind} feature {name!r}")
        if isinstance(strategy, Interpolate):
            if any(isinstance(v, str) for v in values):
                raise StrategyKindMismatch(f"Interpolate on categorical stream {name!r}")
            columns[name] = _interpolate(ts, values, ticks, strategy.max_gap)
        elif isinstance(strategy, WindowMean):
            if any(isinstance(v, str) for v in values):
                raise StrategyKindMismatch(f"WindowMean on categorical stream {name!r}")
            sums = [b.sum if getattr(b, "sum", None) is not None
                    else b.value * getattr(b, "count", 1) for b in buckets]
            counts = [getattr(b, "count", 1) for b in buckets]
            columns[name] = _window_mean(ts, sums, counts, ticks, strategy.width)
        elif isinstance(strategy, StateTrack):
            columns[name] = _state_values(ts, values, ticks, strategy)
        elif isinstance(strategy, LastValue):
            columns[name] = _last_value(ts, values, ticks, strategy.tolerance)
        else:
            raise StrategyKindMismatch(f"unknown strategy {strategy!r}")
    return [Instance(ts=t, node_id=node_id, interface_id=interface_id,
                     values={name: columns[name][i] for name in feature_names})
            for i, t in enumerate(ticks)]


# ---------------------------------------------------------------------------
# labeled-instance CSV exchange format

ANOMALY_COLUMN = "anomaly"


def instances_to_csv(instances: list[Instance], feature_names: list[str] | None = None) -> str:
    """Export instances as CSV with an ``anomaly`` label column.

    This is the exchange format consumed by the rootcause module and by
    external mining tools.
    """
    if feature_names is None:
        feature_names = sorted({n for inst in instances for n in inst.values})
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["ts", "node", "iface"] + feature_names + [ANOMALY_COLUMN])
    for inst in instances:
        row = [str(inst.ts), inst.node_id, inst.interface_id]
        for name in feature_names:
            v = inst.values.get(name)
            row.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
        row.append(inst.label or "")
        writer.writerow(row)
    return out.getvalue()


def instances_from_csv(text: str, schema: Schema | None = None) -> list[Instance]:
    """Read the labeled-instance CSV exchange format back into instances.

    Without a schema, cells that parse as floats are numeric and the rest
    are categorical.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return []
    feature_names = [c for c in header if c not in ("ts", "node", "iface", ANOMALY_COLUMN)]
    specs = schema.by_name if schema is not None else {}
    instances = []
    for row in reader:
        if not row:
            continue
        cells = dict(zip(header, row))
        values: dict[str, float | str | None] = {}
        for name in feature_names:
            cell = cells.get(name, "")
            if cell == "":
                values[name] = None
            elif name in specs and not specs[name].is_numeric:
                values[name] = cell
            else:
                try:
                    values[name] = float(cell)
                except ValueError:
                    values[name] = cell
        label = cells.get(ANOMALY_COLUMN) or None
        instances.append(Instance(ts=int(cells["ts"]), node_id=cells.get("node", ""),
                                  interface_id=cells.get("iface", ""),
                                  values=values, label=label))
    return instances
