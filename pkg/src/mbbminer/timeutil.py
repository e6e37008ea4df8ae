"""Timestamp and duration handling.

Timestamps are integer nanoseconds since the Unix epoch (UTC) everywhere
inside the library.  On the wire and in configuration they may appear as
RFC3339 strings, as integer epoch-nanoseconds, or (for durations) as
strings like ``10ms``, ``1s``, ``5min``, ``2h``.
"""

from __future__ import annotations

import re
from datetime import datetime, timezone

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_SEC = 1_000_000_000
NS_PER_MIN = 60 * NS_PER_SEC
NS_PER_HOUR = 60 * NS_PER_MIN
NS_PER_DAY = 24 * NS_PER_HOUR

_DURATION_UNITS = {
    "ns": 1,
    "us": NS_PER_US,
    "ms": NS_PER_MS,
    "s": NS_PER_SEC,
    "sec": NS_PER_SEC,
    "m": NS_PER_MIN,
    "min": NS_PER_MIN,
    "h": NS_PER_HOUR,
    "d": NS_PER_DAY,
}

_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([a-z]+)\s*$")


def parse_duration(text: str | int | float) -> int:
    """Parse a duration into nanoseconds.

    Accepts a bare number (interpreted as nanoseconds) or a string such as
    ``"10ms"``, ``"1s"``, ``"30min"``.
    """
    if isinstance(text, (int, float)):
        ns = int(text)
        if ns <= 0:
            raise ValueError(f"duration must be positive, got {text!r}")
        return ns
    m = _DURATION_RE.match(text.lower())
    if not m:
        raise ValueError(f"cannot parse duration {text!r}")
    value, unit = m.groups()
    if unit not in _DURATION_UNITS:
        raise ValueError(f"unknown duration unit {unit!r} in {text!r}")
    ns = int(float(value) * _DURATION_UNITS[unit])
    if ns <= 0:
        raise ValueError(f"duration must be positive, got {text!r}")
    return ns


def format_duration(ns: int) -> str:
    """Render a nanosecond duration with the largest exact unit."""
    for unit, size in (("d", NS_PER_DAY), ("h", NS_PER_HOUR), ("min", NS_PER_MIN),
                       ("s", NS_PER_SEC), ("ms", NS_PER_MS), ("us", NS_PER_US)):
        if ns % size == 0 and ns >= size:
            return f"{ns // size}{unit}"
    return f"{ns}ns"


def parse_timestamp(value: str | int | float) -> int:
    """Parse an RFC3339 string or an integer epoch-nanosecond value.

    Integer and float inputs are taken as epoch nanoseconds verbatim; the
    lossless interchange form is the integer one.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a timestamp: {value!r}")
    if isinstance(value, (int, float)):
        ts = float(value)
        if ts != ts or ts in (float("inf"), float("-inf")):
            raise ValueError(f"timestamp not finite: {value!r}")
        return int(value)
    text = value.strip()
    if re.fullmatch(r"[+-]?\d+", text):
        return int(text)
    iso = text.replace("Z", "+00:00").replace("z", "+00:00")
    # datetime only resolves microseconds; keep sub-microsecond digits by hand
    frac_ns = 0
    m = re.search(r"\.(\d+)", iso)
    if m:
        digits = m.group(1)
        if len(digits) > 6:
            frac_ns = int(digits[6:].ljust(3, "0")[:3])
        # fromisoformat (pre-3.11) wants exactly 3 or 6 fractional digits
        iso = iso[:m.start(1)] + digits[:6].ljust(6, "0") + iso[m.end(1):]
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError as exc:
        raise ValueError(f"cannot parse timestamp {value!r}: {exc}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    epoch_s = int(dt.replace(microsecond=0).timestamp())
    return epoch_s * NS_PER_SEC + dt.microsecond * NS_PER_US + frac_ns


def format_timestamp(ts_ns: int) -> str:
    """Render epoch nanoseconds as an RFC3339 UTC string."""
    secs, frac = divmod(int(ts_ns), NS_PER_SEC)
    dt = datetime.fromtimestamp(secs, tz=timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if frac == 0:
        return base + "Z"
    if frac % NS_PER_MS == 0:
        return f"{base}.{frac // NS_PER_MS:03d}Z"
    if frac % NS_PER_US == 0:
        return f"{base}.{frac // NS_PER_US:06d}Z"
    return f"{base}.{frac:09d}Z"
