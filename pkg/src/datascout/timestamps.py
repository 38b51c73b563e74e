"""Timestamp grammar and temporal resolution.

This module is the single definition of what the engine accepts as a
timestamp. A cell parses when it matches one of:

  * ISO-8601 date:       2020-04-15
  * ISO-8601 date-time:  2020-04-15T13:45[:30[.123456]] with optional
                         timezone (Z, +HH:MM or +HHMM), normalized to UTC;
                         a space may replace the 'T'
  * year-month:          2020-04
  * bare year:           2020            (only with name_hint, 1000-2999)
  * epoch seconds:       1586912700      (only with name_hint, 1e8 <= n < 2^32)

``name_hint`` is true when the column name contains "time", "date" or
"epoch" (case-insensitive); bare integers are too ambiguous to accept
otherwise. Values without a timezone are taken as UTC. All parses return
epoch seconds as floats.
"""

from __future__ import annotations

import enum
import re
import statistics
from datetime import datetime, timezone

_NAME_HINTS = ("time", "date", "epoch")

_TIMESTAMP_RE = re.compile(
    r"""^(?P<y>\d{4})
        -(?P<m>\d{2})
        (?:-(?P<d>\d{2})
           (?:[T\ ](?P<H>\d{2}):(?P<M>\d{2})
              (?::(?P<S>\d{2})(?:\.(?P<f>\d{1,6}))?)?
              (?P<tz>Z|[+-]\d{2}:?\d{2})?
           )?
        )?$""",
    re.VERBOSE,
)

_EPOCH_MIN = 10**8  # ~1973; below this a bare integer is just a number
_EPOCH_MAX = 2**32  # ~2106


class Resolution(enum.IntEnum):
    """Temporal granularity, totally ordered fine to coarse."""

    SECOND = 1
    MINUTE = 2
    HOUR = 3
    DAY = 4
    WEEK = 5
    MONTH = 6
    QUARTER = 7
    YEAR = 8

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "Resolution":
        return cls[label.upper()]


# Minimum gap (seconds) between consecutive values at each resolution.
# Month/quarter/year use conservative floors (28/84/350 days) so calendar
# jitter does not push a series into a finer bucket.
RESOLUTION_SECONDS: dict[Resolution, float] = {
    Resolution.SECOND: 1.0,
    Resolution.MINUTE: 60.0,
    Resolution.HOUR: 3600.0,
    Resolution.DAY: 86400.0,
    Resolution.WEEK: 7 * 86400.0,
    Resolution.MONTH: 28 * 86400.0,
    Resolution.QUARTER: 84 * 86400.0,
    Resolution.YEAR: 350 * 86400.0,
}


def name_hints_temporal(column_name: str) -> bool:
    folded = column_name.casefold()
    return any(h in folded for h in _NAME_HINTS)


def parse_timestamp(cell: str, name_hint: bool = False) -> float | None:
    """Parse one cell per the module grammar; None when it is not a timestamp."""
    text = cell.strip()
    if not text:
        return None

    m = _TIMESTAMP_RE.match(text)
    if m:
        return _build_epoch(m)

    if not name_hint:
        return None
    if not re.fullmatch(r"[+-]?\d+", text):
        return None
    n = int(text)
    if 1000 <= n <= 2999:  # bare year
        return datetime(n, 1, 1, tzinfo=timezone.utc).timestamp()
    if _EPOCH_MIN <= n < _EPOCH_MAX:  # epoch seconds
        return float(n)
    return None


def _build_epoch(m: re.Match) -> float | None:
    parts = m.groupdict()
    try:
        dt = datetime(
            int(parts["y"]),
            int(parts["m"]),
            int(parts["d"] or 1),
            int(parts["H"] or 0),
            int(parts["M"] or 0),
            int(parts["S"] or 0),
            int((parts["f"] or "").ljust(6, "0") or 0),
            tzinfo=timezone.utc,
        )
    except ValueError:
        return None
    ts = dt.timestamp()
    tz = parts["tz"]
    if tz and tz != "Z":
        sign = 1 if tz[0] == "+" else -1
        digits = tz[1:].replace(":", "")
        offset = sign * (int(digits[:2]) * 3600 + int(digits[2:4]) * 60)
        ts -= offset  # normalize to UTC
    return ts


def detect_resolution(timestamps: list[float]) -> Resolution:
    """Coarsest resolution whose duration is <= the median gap between
    consecutive distinct timestamps. Fewer than two distinct values -> DAY.
    """
    distinct = sorted(set(timestamps))
    if len(distinct) < 2:
        return Resolution.DAY
    gaps = [b - a for a, b in zip(distinct, distinct[1:])]
    median_gap = statistics.median(gaps)
    result = Resolution.SECOND
    for res in Resolution:
        if median_gap >= RESOLUTION_SECONDS[res]:
            result = res
    return result


def format_iso_utc(epoch_seconds: float) -> str:
    """Render epoch seconds as an ISO-8601 UTC string (Z suffix)."""
    dt = datetime.fromtimestamp(epoch_seconds, tz=timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
