import numpy as np
import pytest

from mbbminer import Bucket, GranularityLadder, SeriesStore, resample
from mbbminer.errors import LevelNotCoarser, UnknownKey, UnsortedInput
from mbbminer.ingest import MeasurementRecord
from mbbminer.schema import FeatureSpec

from conftest import SEC, build_store, ndjson_line

MS = 1_000_000
MEAN = FeatureSpec("X", "numeric", aggregation="mean")
CAT = FeatureSpec("C", "categorical")


def test_ladder_defaults():
    ladder = GranularityLadder()
    assert ladder.levels == (10 * MS, SEC, 60 * SEC, 1800 * SEC)
    assert ladder.base == 10 * MS


def test_choose_level_examples():
    ladder = GranularityLadder()
    # one hour at <=5000 points fits the 1 s level
    assert ladder.choose_level(0, 3600 * SEC, 5000) == SEC
    # a week at <=5000 points only fits the 30 min level
    assert ladder.choose_level(0, 7 * 86400 * SEC, 5000) == 1800 * SEC
    # nothing fits: coarsest level wins
    assert ladder.choose_level(0, 365 * 86400 * SEC, 10) == 1800 * SEC


def test_resample_numeric_mean():
    buckets = [Bucket.from_numeric(i * SEC, float(i)) for i in range(10)]
    (out,) = resample(buckets, 10 * SEC, MEAN)
    assert (out.start_ts, out.value, out.count) == (0, 4.5, 10)
    assert (out.min, out.max, out.sum) == (0.0, 9.0, 45.0)


def test_resample_min_max_aggregations():
    buckets = [Bucket.from_numeric(i * SEC, float(i % 4)) for i in range(8)]
    spec_min = FeatureSpec("X", "numeric", aggregation="min")
    spec_max = FeatureSpec("X", "numeric", aggregation="max")
    assert resample(buckets, 10 * SEC, spec_min)[0].value == 0.0
    assert resample(buckets, 10 * SEC, spec_max)[0].value == 3.0


def test_resample_categorical_mode_and_ties():
    buckets = [Bucket.from_categorical(i * SEC, v)
               for i, v in enumerate(["b", "a", "b", "a"])]
    (out,) = resample(buckets, 10 * SEC, CAT)
    assert out.value == "a"  # tie breaks to the smaller category
    assert out.categories == {"a": 2, "b": 2}


def test_resample_rejects_finer_target():
    buckets = [Bucket.from_numeric(0, 1.0)]
    with pytest.raises(LevelNotCoarser):
        resample(buckets, SEC, MEAN, from_level=60 * SEC)
    with pytest.raises(UnsortedInput):
        resample([Bucket.from_numeric(SEC, 1.0), Bucket.from_numeric(0, 2.0)],
                 60 * SEC, MEAN)


def test_resample_empty_intervals_absent():
    buckets = [Bucket.from_numeric(0, 1.0), Bucket.from_numeric(120 * SEC, 2.0)]
    out = resample(buckets, 60 * SEC, MEAN)
    assert [b.start_ts for b in out] == [0, 120 * SEC]


def _random_stream(rng, n=None):
    n = n or rng.integers(1, 120)
    ts = np.sort(rng.choice(np.arange(0, 7200, dtype=np.int64) * SEC
                            + rng.integers(0, SEC), size=n, replace=False))
    return [Bucket.from_numeric(int(t), float(v))
            for t, v in zip(ts, rng.normal(50, 10, size=n))]


def _approx_bucket(a, b):
    assert a.start_ts == b.start_ts and a.count == b.count
    for field in ("value", "sum", "min", "max"):
        assert getattr(a, field) == pytest.approx(getattr(b, field), abs=1e-9)


def test_resample_idempotent_and_chain_exact():
    """base->coarse equals base->mid->coarse, and re-resampling is a no-op."""
    rng = np.random.default_rng(11)
    for _ in range(200):
        base = resample(_random_stream(rng), 10 * MS, MEAN)
        direct = resample(base, 1800 * SEC, MEAN, from_level=10 * MS)
        mid = resample(base, 60 * SEC, MEAN, from_level=10 * MS)
        chained = resample(mid, 1800 * SEC, MEAN, from_level=60 * SEC)
        assert len(direct) == len(chained)
        for a, b in zip(direct, chained):
            _approx_bucket(a, b)
        again = resample(mid, 60 * SEC, MEAN, from_level=60 * SEC)
        assert again == mid


def test_store_load_query_roundtrip(tmp_path):
    lines = [ndjson_line(i * SEC, "n1", "op0", {"RTT": float(i)})
             for i in range(600)]
    store = build_store(tmp_path / "s", lines)
    level, result = store.query("n1", "op0", ["RTT"], 0, 600 * SEC, 5000)
    assert level == SEC
    buckets = result["RTT"]
    assert len(buckets) == 600
    assert buckets[0].value == 0.0 and buckets[-1].value == 599.0
    # the same query squeezed to 20 points picks the minute level
    level, result = store.query("n1", "op0", ["RTT"], 0, 600 * SEC, 10)
    assert level == 60 * SEC
    assert result["RTT"][0].value == pytest.approx(np.mean(np.arange(60)))


def test_store_unknown_keys(tmp_path):
    lines = [ndjson_line(0, "n1", "op0", {"RTT": 1.0})]
    store = build_store(tmp_path / "s", lines)
    with pytest.raises(UnknownKey):
        store.query("nope", "op0", ["RTT"], 0, SEC, 10)
    with pytest.raises(UnknownKey):
        store.query("n1", "op0", ["Bogus"], 0, SEC, 10)


def test_store_persists_and_reloads(tmp_path):
    lines = [ndjson_line(i * SEC, "n1", "op0", {"RTT": float(i)}) for i in range(5)]
    build_store(tmp_path / "s", lines)
    store = SeriesStore.open(tmp_path / "s")
    level, result = store.query("n1", "op0", ["RTT"], 0, 5 * SEC, 100)
    assert [b.value for b in result["RTT"]] == [0.0, 1.0, 2.0, 3.0, 4.0]


def test_store_incremental_load_and_last_write_wins(tmp_path, schema):
    store = SeriesStore.create(tmp_path / "s", schema)
    store.load([MeasurementRecord(0, "n", "i", {"RTT": 1.0}),
                MeasurementRecord(0, "n", "i", {"RTT": 2.0})])
    _, result = store.query("n", "i", ["RTT"], 0, SEC, 10)
    assert [b.value for b in result["RTT"]] == [2.0]
    store.load([MeasurementRecord(SEC, "n", "i", {"RTT": 7.0})])
    _, result = store.query("n", "i", ["RTT"], 0, 2 * SEC, 1000)
    assert [b.value for b in result["RTT"]] == [2.0, 7.0]


def test_store_categorical_counts_survive_coarsening(tmp_path, schema):
    store = SeriesStore.create(tmp_path / "s", schema)
    modes = ["LTE"] * 70 + ["3G"] * 50
    store.load([MeasurementRecord(i * SEC, "n", "i", {"DeviceMode": m})
                for i, m in enumerate(modes)])
    level, result = store.query("n", "i", ["DeviceMode"], 0, 120 * SEC, 1)
    assert level == 1800 * SEC
    (bucket,) = result["DeviceMode"]
    assert bucket.value == "LTE"
    assert bucket.categories == {"LTE": 70, "3G": 50}


def test_query_granularity_matches_oracle(tmp_path):
    lines = [ndjson_line(i * 30 * SEC, "n1", "op0", {"RTT": float(i)})
             for i in range(200)]
    store = build_store(tmp_path / "s", lines)
    ladder = store.ladder.levels
    rng = np.random.default_rng(3)
    for _ in range(1000):
        t0 = int(rng.integers(0, 5000)) * SEC
        t1 = t0 + int(rng.integers(1, 7 * 86400)) * SEC
        max_points = int(rng.integers(1, 20000))
        level, _ = store.query("n1", "op0", ["RTT"], t0, t1, max_points)
        fitting = [lv for lv in ladder if (t1 - t0) / lv <= max_points]
        assert level == (min(fitting) if fitting else ladder[-1])


def test_geo_select_bbox(tmp_path):
    lines = []
    for i in range(100):
        lines.append(ndjson_line(i * SEC, "n1", "op0", {
            "RTT": float(i), "Latitude": 59.0 + i * 0.01, "Longitude": 10.0}))
    store = build_store(tmp_path / "s", lines)
    # rows 50..70 fall inside the latitude band
    out = store.geo_select(0, 100 * SEC, (59.5, 59.7, 9.0, 11.0), ["RTT"])
    ts = [i.ts for i in out]
    assert min(ts) == 50 * SEC and max(ts) == 70 * SEC
    for inst in out:
        assert 59.5 <= inst.values["Latitude"] <= 59.7
    # an empty box selects nothing
    assert store.geo_select(0, 100 * SEC, (0.0, 1.0, 0.0, 1.0), ["RTT"]) == []


def test_summary_inventory(rtt_store):
    summary = rtt_store.summary()
    info = summary["n1"]["op0"]
    assert set(info["features"]) >= {"RTT", "DeviceMode", "Latitude", "Longitude"}
    lo, hi = info["time_extent"]
    assert lo == 0 and hi >= 1199 * SEC
