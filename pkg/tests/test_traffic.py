"""Tests for packet log parsing and the NU, EN and IP activity metrics."""

import json

import pytest

from src.core.config import ActivityConfig
from src.core.exceptions import TrafficFormatError
from src.core.models import PacketLogRow, UptimeClass
from src.services.cve_ingest import load_catalog
from src.services.traffic import (
    blacklist_metric,
    default_profile,
    encryption_metric,
    load_blacklist,
    online_fraction,
    parse_log,
    profile_devices,
    uptime_class,
)


def row(time: float, protocol: str = "TLSv1.2", source: str = "10.0.0.1", index: int = 1):
    return PacketLogRow(
        index=index,
        time=time,
        source=source,
        destination="10.0.0.2",
        protocol=protocol,
        length=60,
    )


@pytest.fixture
def catalog(catalog_entries):
    return load_catalog(json.dumps(catalog_entries).encode())


class TestParseLog:
    """Tests for CSV parsing and attribution."""

    def test_attribution(self, traffic_csv, catalog):
        log = parse_log(traffic_csv, catalog)

        assert [r.index for r in log.rows["echo"]] == [1, 3, 5]
        assert [r.index for r in log.rows["roku"]] == [2, 5]
        assert log.foreign == 1
        assert log.total == 5
        assert log.attributed == 4

    def test_rows_sorted_by_time(self, traffic_csv, catalog):
        log = parse_log(traffic_csv, catalog)

        times = [r.time for r in log.rows["echo"]]
        assert times == sorted(times)
        assert log.capture_span == 5999.0

    def test_missing_column(self, catalog):
        raw = b"No.,Time,Source,Destination,Protocol,Length\n1,0.0,a,b,TCP,60\n"

        with pytest.raises(TrafficFormatError) as exc_info:
            parse_log(raw, catalog)

        assert exc_info.value.row == 0
        assert "Info" in str(exc_info.value)

    def test_bad_row_named(self, catalog):
        raw = (
            b"No.,Time,Source,Destination,Protocol,Length,Info\n"
            b"1,0.0,a,b,TCP,60,ok\n"
            b"2,soon,a,b,TCP,60,bad time\n"
        )

        with pytest.raises(TrafficFormatError) as exc_info:
            parse_log(raw, catalog)

        assert exc_info.value.row == 2
        assert "(row 2)" in str(exc_info.value)

    def test_empty_file(self, catalog):
        with pytest.raises(TrafficFormatError):
            parse_log(b"", catalog)


class TestUptime:
    """Tests for the online-fraction classes."""

    def test_no_rows_never_online(self):
        assert uptime_class([], 6000.0, 600.0) == UptimeClass.NEVER_ONLINE

    def test_every_window(self):
        rows = [row(600.0 * i) for i in range(11)]

        assert online_fraction(rows, 6000.0, 600.0) == (1.0, 10)
        assert uptime_class(rows, 6000.0, 600.0) == UptimeClass.ALWAYS_ONLINE

    def test_rarely(self):
        rows = [row(0.0), row(650.0)]

        assert online_fraction(rows, 6000.0, 600.0) == (0.2, 10)
        assert uptime_class(rows, 6000.0, 600.0) == UptimeClass.RARELY_ONLINE

    def test_frequently(self):
        rows = [row(t) for t in (0.0, 700.0, 1300.0, 1900.0)]

        assert uptime_class(rows, 6000.0, 600.0) == UptimeClass.FREQUENTLY_ONLINE

    def test_more_windows_never_lower_the_class(self):
        order = [
            UptimeClass.NEVER_ONLINE,
            UptimeClass.RARELY_ONLINE,
            UptimeClass.FREQUENTLY_ONLINE,
            UptimeClass.ALWAYS_ONLINE,
        ]
        rows: list[PacketLogRow] = []
        previous = order.index(uptime_class(rows, 6000.0, 600.0))
        for i in range(10):
            rows.append(row(600.0 * i + 1))
            current = order.index(uptime_class(rows, 6000.0, 600.0))
            assert current >= previous
            previous = current

    def test_custom_thresholds(self):
        config = ActivityConfig(frequently_online_fraction=0.2)
        rows = [row(0.0), row(650.0)]

        assert uptime_class(rows, 6000.0, 600.0, config) == UptimeClass.FREQUENTLY_ONLINE


class TestEncryption:
    """Tests for the encryption multiplier."""

    def test_all_encrypted(self):
        assert encryption_metric([row(0.0, "TLSv1.2"), row(1.0, "tlsv1.3")]) == (1.0, 1.0)

    def test_plaintext(self):
        assert encryption_metric([row(0.0, "HTTP")]) == (0.0, 1.5)

    def test_minority_encrypted(self):
        rows = [row(float(i), "TLSv1.2") for i in range(3)]
        rows += [row(float(i), "HTTP") for i in range(7)]

        fraction, en = encryption_metric(rows)

        assert fraction == pytest.approx(0.3)
        assert en == 1.5

    def test_no_rows_unencrypted(self):
        assert encryption_metric([]) == (0.0, 1.5)


class TestBlacklist:
    """Tests for the blacklist multiplier."""

    def test_clean(self):
        assert blacklist_metric([row(0.0)], set()) == (0, 1.0)

    def test_hit(self):
        rows = [row(0.0, source="203.0.113.9"), row(1.0)]

        assert blacklist_metric(rows, {"203.0.113.9"}) == (1, 2.0)

    def test_load_blacklist_skips_comments(self):
        text = "# header\n203.0.113.9\n\n198.51.100.1  # scanner\n"

        assert load_blacklist(text) == {"203.0.113.9", "198.51.100.1"}


class TestProfiles:
    """Tests for device profiles."""

    def test_default_profile(self):
        profile = default_profile("echo")

        assert profile.uptime_class == UptimeClass.RARELY_ONLINE
        assert profile.nu_multiplier == 1.07
        assert profile.en_multiplier == 1.5
        assert profile.ip_multiplier == 1.0
        assert profile.static_defaults is True

    def test_profiles_from_log(self, traffic_csv, catalog):
        log = parse_log(traffic_csv, catalog)

        profiles = profile_devices(["echo", "roku"], log, {"203.0.113.9"})

        echo, roku = profiles["echo"], profiles["roku"]
        assert echo.uptime_class == UptimeClass.RARELY_ONLINE
        assert echo.en_multiplier == 1.0
        assert echo.ip_multiplier == 1.0
        assert roku.en_multiplier == 1.5
        assert roku.blacklist_hits == 1
        assert roku.ip_multiplier == 2.0
        assert roku.window_count == 10
        assert not roku.static_defaults

    def test_profiles_without_log(self):
        profiles = profile_devices(["a", "b"], None)

        assert all(p.static_defaults for p in profiles.values())

    def test_multipliers_at_least_one(self, traffic_csv, catalog):
        log = parse_log(traffic_csv, catalog)

        for profile in profile_devices(["echo", "roku"], log).values():
            assert profile.nu_multiplier >= 1.0
            assert profile.en_multiplier >= 1.0
            assert profile.ip_multiplier >= 1.0
