import json

import numpy as np
import pytest

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def record_criterion(name: str, ok: bool):
    ACCEPTANCE_RESULTS.append((name, bool(ok)))
    assert ok, f"acceptance criterion failed: {name}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")

from mbbminer import SeriesStore, default_monroe_schema, parse_records
from mbbminer.timeutil import NS_PER_SEC

SEC = NS_PER_SEC


def ndjson_line(ts, node, iface, fields):
    return json.dumps({"ts": ts, "node": node, "iface": iface, "fields": fields})


def build_store(path, lines, schema=None):
    """Create a store at path and load records parsed from ndjson lines."""
    schema = schema or default_monroe_schema()
    store = SeriesStore.create(path, schema)
    records, errors = parse_records(iter(lines), schema, format="ndjson")
    assert not errors, errors[:3]
    store.load(records)
    return store


@pytest.fixture
def schema():
    return default_monroe_schema()


@pytest.fixture
def rtt_store(tmp_path):
    """20 min of 1 Hz RTT around 30 ms with a 100 ms step at t=600 s."""
    rng = np.random.default_rng(7)
    lines = []
    for i in range(1200):
        rtt = 30.0 + rng.uniform(-1, 1) + (100.0 if 600 <= i < 900 else 0.0)
        lines.append(ndjson_line(i * SEC, "n1", "op0", {
            "RTT": rtt, "DeviceMode": "LTE" if i % 9 else "3G",
            "Latitude": 59.0 + i * 1e-4, "Longitude": 10.0 + i * 2e-4}))
    return build_store(tmp_path / "store", lines)
