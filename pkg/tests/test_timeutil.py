import pytest

from mbbminer.timeutil import (NS_PER_SEC, format_duration, format_timestamp,
                               parse_duration, parse_timestamp)


def test_duration_suffixes():
    assert parse_duration("10ms") == 10_000_000
    assert parse_duration("1s") == NS_PER_SEC
    assert parse_duration("1min") == 60 * NS_PER_SEC
    assert parse_duration("1m") == 60 * NS_PER_SEC
    assert parse_duration("30min") == 1800 * NS_PER_SEC
    assert parse_duration("2h") == 7200 * NS_PER_SEC
    assert parse_duration("7d") == 7 * 86400 * NS_PER_SEC
    assert parse_duration("250us") == 250_000
    assert parse_duration("5ns") == 5


def test_duration_roundtrip():
    for text in ("10ms", "1s", "90s", "1min", "30min", "2h", "7d"):
        assert parse_duration(format_duration(parse_duration(text))) == \
            parse_duration(text)


def test_duration_rejects_garbage():
    for bad in ("", "fast", "10 parsecs", "-5s"):
        with pytest.raises(ValueError):
            parse_duration(bad)


def test_timestamp_rfc3339():
    assert parse_timestamp("1970-01-01T00:00:00Z") == 0
    assert parse_timestamp("1970-01-01T00:00:01.5Z") == 1_500_000_000
    assert parse_timestamp("1970-01-01T01:00:00+01:00") == 0
    # epoch integers pass through
    assert parse_timestamp(12345) == 12345
    assert parse_timestamp("12345") == 12345


def test_timestamp_subsecond_digits():
    # more digits than microseconds must not be silently truncated badly
    assert parse_timestamp("1970-01-01T00:00:00.123456789Z") == 123_456_789


def test_timestamp_roundtrip():
    for ns in (0, 1, 999, 1_500_000_000, 1_600_000_000 * NS_PER_SEC + 42):
        assert parse_timestamp(format_timestamp(ns)) == ns


def test_timestamp_rejects_garbage():
    with pytest.raises(ValueError):
        parse_timestamp("yesterday")
