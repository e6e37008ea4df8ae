"""Parsing raw measurement logs into validated records.

Two interchange formats are supported:

* NDJSON — one JSON object per line, shaped
  ``{"ts": ..., "node": ..., "iface": ..., "fields": {...}}``
  (top-level key names follow the schema's time/node/interface fields).
* CSV — header row with the time/node/interface columns plus one column
  per feature; empty cells are nulls.

Malformed lines never abort a parse: each produces a :class:`ParseError`
carrying the 1-based line number.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .schema import Schema
from .timeutil import format_timestamp, parse_timestamp

logger = logging.getLogger(__name__)

FeatureValue = float | str | None


@dataclass(frozen=True)
class MeasurementRecord:
    """One timestamped observation from one interface of one node."""

    ts: int
    node_id: str
    interface_id: str
    values: dict[str, FeatureValue] = field(default_factory=dict)

    def __post_init__(self):
        if not self.node_id or not self.interface_id:
            raise ValueError("node_id and interface_id must be nonempty")


@dataclass(frozen=True)
class ParseError:
    """A rejected input line and why it was rejected."""

    line: int
    reason: str


def _coerce_value(name: str, raw, kind: str) -> FeatureValue:
    """Validate one field value against its feature kind.

    Raises ValueError on mismatch; returns None for explicit nulls.
    """
    if raw is None or raw == "":
        return None
    if kind == "numeric":
        if isinstance(raw, bool):
            raise ValueError(f"field {name!r}: boolean is not numeric")
        if isinstance(raw, (int, float)):
            value = float(raw)
        elif isinstance(raw, str):
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(f"field {name!r}: {raw!r} is not numeric") from None
        else:
            raise ValueError(f"field {name!r}: {raw!r} is not numeric")
        if not math.isfinite(value):
            raise ValueError(f"field {name!r}: non-finite value {raw!r}")
        return value
    # categorical / event
    if isinstance(raw, str):
        return raw
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        # numeric-looking categories (CID, frequency bands) are kept as text
        return repr(raw) if isinstance(raw, float) else str(raw)
    raise ValueError(f"field {name!r}: {raw!r} is not categorical")


def _build_record(ts_raw, node_raw, iface_raw, fields: dict, schema: Schema,
                  strict: bool) -> MeasurementRecord:
    if ts_raw is None or ts_raw == "":
        raise ValueError("missing timestamp")
    ts = parse_timestamp(ts_raw)
    node = str(node_raw) if node_raw not in (None, "") else ""
    iface = str(iface_raw) if iface_raw not in (None, "") else ""
    if not node:
        raise ValueError("missing node id")
    if not iface:
        raise ValueError("missing interface id")
    specs = schema.by_name
    values: dict[str, FeatureValue] = {}
    for name, raw in fields.items():
        spec = specs.get(name)
        if spec is None:
            if strict:
                raise ValueError(f"unknown field {name!r}")
            logger.warning("dropping unknown field %r", name)
            continue
        values[name] = _coerce_value(name, raw, spec.kind)
    return MeasurementRecord(ts=ts, node_id=node, interface_id=iface, values=values)


def _iter_lines(stream) -> Iterator[str]:
    if isinstance(stream, (bytes, str)):
        text = stream.decode() if isinstance(stream, bytes) else stream
        yield from io.StringIO(text)
        return
    for line in stream:
        yield line.decode() if isinstance(line, bytes) else line


def parse_records(stream, schema: Schema, format: str = "ndjson",
                  strict: bool = False) -> tuple[list[MeasurementRecord], list[ParseError]]:
    """Parse a byte/text stream of measurement lines.

    Returns ``(records, errors)``; records may arrive out of time order.
    """
    if format == "ndjson":
        return _parse_ndjson(stream, schema, strict)
    if format == "csv":
        return _parse_csv(stream, schema, strict)
    raise ValueError(f"unknown format {format!r}")


def _parse_ndjson(stream, schema: Schema, strict: bool):
    records: list[MeasurementRecord] = []
    errors: list[ParseError] = []
    for lineno, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            fields = obj.get("fields", {})
            if not isinstance(fields, dict):
                raise ValueError("'fields' must be an object")
            records.append(_build_record(
                obj.get(schema.time_field), obj.get(schema.node_field),
                obj.get(schema.interface_field), fields, schema, strict))
        except (ValueError, json.JSONDecodeError) as exc:
            errors.append(ParseError(lineno, str(exc)))
    return records, errors


def _parse_csv(stream, schema: Schema, strict: bool):
    records: list[MeasurementRecord] = []
    errors: list[ParseError] = []
    reader = csv.reader(_iter_lines(stream))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("csv input has no header row") from None
    identity = {schema.time_field, schema.node_field, schema.interface_field}
    for col in identity:
        if col not in header:
            raise ValueError(f"csv header missing required column {col!r}")
    for row in reader:
        lineno = reader.line_num
        if not row or all(cell == "" for cell in row):
            continue
        try:
            if len(row) != len(header):
                raise ValueError(f"expected {len(header)} cells, got {len(row)}")
            cells = dict(zip(header, row))
            fields = {k: v for k, v in cells.items() if k not in identity}
            records.append(_build_record(
                cells[schema.time_field], cells[schema.node_field],
                cells[schema.interface_field], fields, schema, strict))
        except ValueError as exc:
            errors.append(ParseError(lineno, str(exc)))
    return records, errors


def serialize_records(records: Iterable[MeasurementRecord], schema: Schema,
                      format: str = "ndjson") -> str:
    """Serialize records back to an interchange format (round-trips)."""
    if format == "ndjson":
        lines = []
        for r in records:
            lines.append(json.dumps({
                schema.time_field: r.ts,
                schema.node_field: r.node_id,
                schema.interface_field: r.interface_id,
                "fields": r.values,
            }, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")
    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        names = [f.name for f in schema.features]
        writer.writerow([schema.time_field, schema.node_field,
                         schema.interface_field] + names)
        for r in records:
            row = [str(r.ts), r.node_id, r.interface_id]
            for name in names:
                v = r.values.get(name)
                if v is None:
                    row.append("")
                elif isinstance(v, float):
                    row.append(repr(v))
                else:
                    row.append(str(v))
            writer.writerow(row)
        return out.getvalue()
    raise ValueError(f"unknown format {format!r}")


@dataclass(frozen=True)
class LoadReport:
    """Outcome of loading a record batch into a store."""

    accepted: int
    rejected: int
    time_extent: tuple[int, int] | None

    def describe(self) -> str:
        if self.time_extent is None:
            return f"accepted={self.accepted} rejected={self.rejected} (empty extent)"
        lo, hi = self.time_extent
        return (f"accepted={self.accepted} rejected={self.rejected} "
                f"extent=[{format_timestamp(lo)}, {format_timestamp(hi)}]")
