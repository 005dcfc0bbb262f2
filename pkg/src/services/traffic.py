"""Dynamic activity metrics from exported packet-capture CSV logs."""

import io
import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import pandas as pd
import structlog

from src.core.config import ActivityConfig, ScoringConfig
from src.core.exceptions import TrafficFormatError
from src.core.models import DeviceCatalog, PacketLogRow, TrafficProfile, UptimeClass

logger = structlog.get_logger(__name__)

COLUMNS = ("No.", "Time", "Source", "Destination", "Protocol", "Length", "Info")


@dataclass
class TrafficLog:
    """Rows of one capture attributed to catalog devices."""

    rows: dict[str, list[PacketLogRow]]
    foreign: int = 0
    total: int = 0
    capture_span: float = 0.0
    device_ids: list[str] = field(default_factory=list)

    @property
    def attributed(self) -> int:
        return self.total - self.foreign


def _read_frame(raw_csv: bytes) -> pd.DataFrame:
    try:
        frame = pd.read_csv(io.BytesIO(raw_csv), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise TrafficFormatError("Traffic CSV is empty") from e
    except pd.errors.ParserError as e:
        raise TrafficFormatError(f"Malformed traffic CSV: {e}") from e

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise TrafficFormatError(f"Traffic CSV is missing columns {missing}", row=0)
    return frame


def _row(position: int, record: dict) -> PacketLogRow:
    try:
        return PacketLogRow(
            index=int(record["No."]),
            time=float(record["Time"]),
            source=record["Source"].strip(),
            destination=record["Destination"].strip(),
            protocol=record["Protocol"].strip(),
            length=int(record["Length"]),
        )
    except (TypeError, ValueError) as e:
        raise TrafficFormatError(f"Unparsable traffic row: {e}", row=position) from e


def parse_log(raw_csv: bytes, catalog: DeviceCatalog) -> TrafficLog:
    """
    Parse a 7-column packet log and attribute rows to catalog devices by IP.

    Rows are numbered from 1 after the header in error messages. A row touching
    two catalog devices is attributed to both.
    """
    frame = _read_frame(raw_csv)

    owners: dict[str, list[str]] = {}
    for entry in catalog.entries:
        for ip in entry.ip_addresses:
            owners.setdefault(ip, []).append(entry.device_id)

    records = frame.to_dict("records")
    rows = [_row(position, record) for position, record in enumerate(records, 1)]
    rows.sort(key=lambda r: (r.time, r.index))

    attributed: dict[str, list[PacketLogRow]] = {e.device_id: [] for e in catalog.entries}
    foreign = 0
    for row in rows:
        devices = dict.fromkeys(owners.get(row.source, []) + owners.get(row.destination, []))
        if not devices:
            foreign += 1
        for device_id in devices:
            attributed[device_id].append(row)

    span = max((r.time for r in rows), default=0.0)
    log = TrafficLog(
        rows=attributed,
        foreign=foreign,
        total=len(rows),
        capture_span=span,
        device_ids=[e.device_id for e in catalog.entries],
    )
    logger.info(
        "Parsed traffic log",
        row_count=log.total,
        foreign_count=foreign,
        capture_span=span,
    )
    return log


# =============================================================================
# Metrics
# =============================================================================


def online_fraction(
    rows: list[PacketLogRow],
    capture_span: float,
    window: float,
) -> tuple[float, int]:
    """Fraction of windows holding at least one packet, and the window count."""
    window_count = max(1, math.ceil(capture_span / window))
    if not rows:
        return 0.0, window_count
    occupied = {min(int(max(row.time, 0.0) // window), window_count - 1) for row in rows}
    return len(occupied) / window_count, window_count


def uptime_class(
    rows: list[PacketLogRow],
    capture_span: float,
    window: float,
    config: ActivityConfig | None = None,
) -> UptimeClass:
    config = config or ActivityConfig()
    fraction, _ = online_fraction(rows, capture_span, window)
    if fraction >= config.always_online_fraction:
        return UptimeClass.ALWAYS_ONLINE
    if fraction >= config.frequently_online_fraction:
        return UptimeClass.FREQUENTLY_ONLINE
    if fraction > 0:
        return UptimeClass.RARELY_ONLINE
    return UptimeClass.NEVER_ONLINE


def encryption_metric(
    rows: list[PacketLogRow],
    config: ActivityConfig | None = None,
    scoring: ScoringConfig | None = None,
) -> tuple[float, float]:
    """(encrypted_fraction, en_multiplier) from the protocols a device used."""
    config = config or ActivityConfig()
    scoring = scoring or ScoringConfig()
    secure = {p.lower() for p in config.secure_protocols}

    fraction = sum(row.protocol.lower() in secure for row in rows) / len(rows) if rows else 0.0
    key = "encrypted" if fraction >= config.encrypted_majority and rows else "unencrypted"
    return fraction, scoring.en_table[key]


def blacklist_metric(
    rows: list[PacketLogRow],
    blacklist: set[str],
    scoring: ScoringConfig | None = None,
) -> tuple[int, float]:
    """(hits, ip_multiplier): rows whose source or destination is blacklisted."""
    scoring = scoring or ScoringConfig()
    hits = sum(1 for row in rows if row.source in blacklist or row.destination in blacklist)
    return hits, scoring.ip_table["blacklisted" if hits else "clean"]


def load_blacklist(text: str) -> set[str]:
    """One IP per line; blank lines and "#" comments are ignored."""
    entries = (line.split("#", 1)[0].strip() for line in text.splitlines())
    return {entry for entry in entries if entry}


# =============================================================================
# Profiles
# =============================================================================


def profile_device(
    device_id: str,
    rows: list[PacketLogRow],
    capture_span: float,
    blacklist: Iterable[str] = (),
    activity: ActivityConfig | None = None,
    scoring: ScoringConfig | None = None,
) -> TrafficProfile:
    """Compute the NU, EN and IP multipliers of one device."""
    activity = activity or ActivityConfig()
    scoring = scoring or ScoringConfig()

    uptime = uptime_class(rows, capture_span, activity.uptime_window_seconds, activity)
    _, window_count = online_fraction(rows, capture_span, activity.uptime_window_seconds)
    fraction, en = encryption_metric(rows, activity, scoring)
    hits, ip = blacklist_metric(rows, set(blacklist), scoring)

    return TrafficProfile(
        device_id=device_id,
        uptime_class=uptime,
        nu_multiplier=scoring.nu_table[uptime.value],
        encrypted_fraction=fraction,
        en_multiplier=en,
        blacklist_hits=hits,
        ip_multiplier=ip,
        window_count=window_count,
    )


def default_profile(device_id: str, scoring: ScoringConfig | None = None) -> TrafficProfile:
    """Static profile used when no traffic was captured: rarely online, unencrypted, clean."""
    scoring = scoring or ScoringConfig()
    return TrafficProfile(
        device_id=device_id,
        uptime_class=UptimeClass.RARELY_ONLINE,
        nu_multiplier=scoring.nu_table[UptimeClass.RARELY_ONLINE.value],
        encrypted_fraction=0.0,
        en_multiplier=scoring.en_table["unencrypted"],
        blacklist_hits=0,
        ip_multiplier=scoring.ip_table["clean"],
        static_defaults=True,
    )


def profile_devices(
    device_ids: Iterable[str],
    log: TrafficLog | None,
    blacklist: Iterable[str] = (),
    activity: ActivityConfig | None = None,
    scoring: ScoringConfig | None = None,
) -> dict[str, TrafficProfile]:
    """Profiles for every device; static defaults when no log was supplied."""
    blacklist = set(blacklist)
    if log is None:
        logger.info("No traffic log, applying static profile defaults")
        return {d: default_profile(d, scoring) for d in device_ids}
    return {
        d: profile_device(d, log.rows.get(d, []), log.capture_span, blacklist, activity, scoring)
        for d in device_ids
    }
