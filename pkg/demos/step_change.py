"""Walkthrough: a latency step change, end to end.

Synthesizes twenty minutes of 1 Hz round-trip times that jump from
~100 ms to ~250 ms at the ten-minute mark, loads them into a store,
queries them back at an automatically chosen granularity, and runs the
rolling detector.

Run:  python3 demos/step_change.py
"""

import json
import tempfile

import numpy as np

from mbbminer import (RollingParams, SeriesStore, default_monroe_schema,
                      detect_rolling, parse_records)

SEC = 1_000_000_000

rng = np.random.default_rng(0)
lines = []
for i in range(1200):
    rtt = 100.0 + rng.uniform(-1, 1) + (150.0 if i >= 600 else 0.0)
    lines.append(json.dumps({"ts": i * SEC, "node": "n1", "iface": "op0",
                             "fields": {"RTT": round(rtt, 3)}}))

schema = default_monroe_schema()
store = SeriesStore.create(tempfile.mkdtemp() + "/store", schema)
records, errors = parse_records(iter(lines), schema)
report = store.load(records)
print(f"loaded: {report.describe()}")

# a 5000-point budget over 20 minutes fits the 1 s level exactly
level, series = store.query("n1", "op0", ["RTT"], 0, 1200 * SEC, 5000)
buckets = series["RTT"]
print(f"query returned {len(buckets)} buckets at level {level / SEC:.0f}s")

# the same query squeezed through 20 points falls back to 1 min buckets
level, series = store.query("n1", "op0", ["RTT"], 0, 1200 * SEC, 20)
print(f"squeezed to {len(series['RTT'])} buckets at level {level / SEC:.0f}s")

ts = np.array([b.start_ts for b in buckets])
x = np.array([b.value for b in buckets])
for region in detect_rolling((ts, x), RollingParams()):
    print(f"region {region.start_ts / SEC:.0f}s..{region.end_ts / SEC:.0f}s "
          f"direction={region.direction} score={region.score:.1f} "
          f"({len(region.outlier_ts)} outliers)")
