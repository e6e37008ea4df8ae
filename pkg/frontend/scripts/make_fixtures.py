"""Regenerate the golden service fixtures used by the explorer tests.

Builds a small store, runs the real HTTP service against it, and
freezes the request/response pairs (and the export oracle CSV) that the
vitest suite replays. Run from the repository root:

    python3 frontend/scripts/make_fixtures.py
"""

import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from mbbminer import SeriesStore, default_monroe_schema, parse_records
from mbbminer.merge import instances_to_csv
from mbbminer.service import create_app

SEC = 1_000_000_000
HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent / "test" / "fixtures"
STORE = HERE.parent / "test" / "fixtures" / "store"


def build_store():
    import shutil
    shutil.rmtree(STORE, ignore_errors=True)
    schema = default_monroe_schema()
    store = SeriesStore.create(STORE, schema)
    rng = np.random.default_rng(0)
    lines = []
    for i in range(1200):
        # a 5-sigma step: clearly shaded at k_sigma=3, invisible at 8
        rtt = 100.0 + rng.normal(0, 1) + (5.0 if i >= 600 else 0.0)
        fields = {"RTT": rtt, "DeviceMode": "LTE" if i % 9 else "3G",
                  "Latitude": 59.0 + i * 0.001, "Longitude": 10.0 + i * 0.002}
        lines.append(json.dumps({"ts": i * SEC, "node": "n1", "iface": "op0",
                                 "fields": fields}))
        if i % 2 == 0:  # a second, quiet interface for the lane test
            lines.append(json.dumps({"ts": i * SEC, "node": "n1", "iface": "op1",
                                     "fields": {"RTT": 40.0 + rng.uniform(-1, 1),
                                                "DeviceMode": "LTE"}}))
    records, errors = parse_records(iter(lines), schema)
    assert not errors
    store.load(records)
    return store


def main():
    store = build_store()
    client = TestClient(create_app(STORE))
    FIXTURES.mkdir(parents=True, exist_ok=True)

    scope = {"node": "n1", "iface": "op0", "from": 0, "to": 1200 * SEC}
    trace = []
    for k_sigma in (3, 8):
        body = {"method": "rolling", "target": "RTT", "scope": scope,
                "params": {"window": "5min", "k_sigma": k_sigma,
                           "min_cluster": 5, "max_gap": "60s"}}
        resp = client.post("/api/detect", json=body)
        assert resp.status_code == 200
        trace.append({"request": {"method": "POST", "path": "/api/detect",
                                  "body": body},
                      "response": resp.json()})
    (FIXTURES / "detect-trace.json").write_text(
        json.dumps(trace, indent=1) + "\n")

    series = client.get("/api/series", params={
        "node": "n1", "iface": "op0", "feature": "RTT",
        "from": "0", "to": str(1200 * SEC), "max_points": 5000}).json()
    (FIXTURES / "series-step.json").write_text(
        json.dumps(series, indent=1) + "\n")

    nodes = client.get("/api/nodes").json()
    (FIXTURES / "nodes.json").write_text(json.dumps(nodes, indent=1) + "\n")

    bbox = (59.5, 59.7, 9.0, 12.0)
    geo = client.get("/api/geo", params={
        "feature": "RTT", "bbox": ",".join(str(v) for v in bbox),
        "from": "0", "to": str(1200 * SEC)}).json()
    (FIXTURES / "geo-box.json").write_text(json.dumps(geo, indent=1) + "\n")

    # export oracle: the same selection serialized by the library itself
    oracle = store.geo_select(0, 1200 * SEC, bbox, ["RTT"])
    (FIXTURES / "geo-box-export.csv").write_text(
        instances_to_csv(oracle, ["RTT", "Latitude", "Longitude"]))

    fleet = client.get("/api/fleet", params={
        "target": "RTT", "from": "0", "to": str(1200 * SEC),
        "bucket": "5min"}).json()
    (FIXTURES / "fleet.json").write_text(json.dumps(fleet, indent=1) + "\n")

    import shutil
    shutil.rmtree(STORE, ignore_errors=True)
    print("fixtures written to", FIXTURES)


if __name__ == "__main__":
    main()
