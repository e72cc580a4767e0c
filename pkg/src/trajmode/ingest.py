"""Reading GPS trajectory logs and assembling labeled trajectory samples.

Expected on-disk layout (one directory per user):

    <root>/Data/<user_id>/Trajectory/*.plt   point logs
    <root>/Data/<user_id>/labels.txt         transportation-mode intervals

A .plt file carries six header lines followed by comma-separated records
``lat,lon,0,altitude,serial_date,date,time`` with ``date`` as YYYY-MM-DD and
``time`` as HH:MM:SS.  The serial date field is redundant and ignored.
labels.txt is tab-separated with a header row and records
``YYYY/MM/DD HH:MM:SS<TAB>YYYY/MM/DD HH:MM:SS<TAB>mode``.

Altitude is kept as logged (feet, -777 meaning missing).  Timestamps are
naive local datetimes; no timezone handling is attempted.
"""

from __future__ import annotations

import bisect
import json
import logging
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

# Closed label vocabulary; anything else in labels.txt is a record error.
MODES = frozenset(
    {
        "taxi",
        "car",
        "train",
        "subway",
        "walk",
        "airplane",
        "boat",
        "bike",
        "run",
        "motorcycle",
        "bus",
    }
)

PLT_HEADER_LINES = 6
MISSING_ALTITUDE = -777.0


class RecordError(ValueError):
    """A single malformed record, carrying its 1-based line number."""

    def __init__(self, line_no: int, reason: str, source: str = ""):
        self.line_no = line_no
        self.reason = reason
        prefix = f"{source}:" if source else ""
        super().__init__(f"{prefix}line {line_no}: {reason}")


@dataclass(frozen=True, slots=True)
class GpsPoint:
    """One logged GPS fix."""

    user_id: str
    latitude: float
    longitude: float
    altitude: float
    timestamp: datetime


@dataclass(frozen=True, slots=True)
class LabelInterval:
    """A human-annotated mode interval, bounds inclusive."""

    start: datetime
    end: datetime
    mode: str


@dataclass(frozen=True)
class TrajectorySample:
    """A contiguous single-mode, single-day run of points for one user."""

    user_id: str
    day: date
    mode: str
    points: tuple[GpsPoint, ...]

    def validate(self) -> None:
        """Check the structural invariants; raises ValueError on violation."""
        if not self.points:
            raise ValueError("sample has no points")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        prev = None
        for p in self.points:
            if p.user_id != self.user_id:
                raise ValueError("mixed user ids within a sample")
            if p.timestamp.date() != self.day:
                raise ValueError("point outside the sample's calendar day")
            if prev is not None and p.timestamp <= prev:
                raise ValueError("timestamps not strictly increasing")
            prev = p.timestamp


def parse_plt(content: str, user_id: str, strict: bool = False, source: str = "") -> list[GpsPoint]:
    """Parse one .plt point log.

    Args:
        content: full file text.
        user_id: owner of the log, stamped onto every point.
        strict: raise RecordError on the first malformed record instead of
            skipping it with a warning.
        source: optional label (file name) used in messages.

    Returns:
        Points in file order.  A file shorter than the header yields [].
    """
    points: list[GpsPoint] = []
    lines = content.splitlines()
    for line_no, line in enumerate(lines[PLT_HEADER_LINES:], start=PLT_HEADER_LINES + 1):
        line = line.strip()
        if not line:
            continue
        try:
            points.append(_parse_plt_record(line, user_id))
        except ValueError as exc:
            err = RecordError(line_no, str(exc), source)
            if strict:
                raise err from None
            logger.warning("skipping point record (%s)", err)
    return points


def _parse_plt_record(line: str, user_id: str) -> GpsPoint:
    parts = line.split(",")
    if len(parts) != 7:
        raise ValueError(f"expected 7 fields, got {len(parts)}")
    try:
        lat = float(parts[0])
        lon = float(parts[1])
        alt = float(parts[3])
    except ValueError:
        raise ValueError("non-numeric coordinate field") from None
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} out of range")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"longitude {lon} out of range")
    try:
        ts = datetime.fromisoformat(f"{parts[5]}T{parts[6]}")
    except ValueError:
        raise ValueError(f"bad timestamp {parts[5]!r} {parts[6]!r}") from None
    return GpsPoint(user_id, lat, lon, alt, ts)


def parse_labels(content: str, strict: bool = False, source: str = "") -> list[LabelInterval]:
    """Parse a labels.txt file into mode intervals.

    The first line is the header and is skipped.  A header-only file yields
    an empty list.  Records with an unknown mode or start > end are
    record-level errors handled per ``strict``.
    """
    intervals: list[LabelInterval] = []
    lines = content.splitlines()
    for line_no, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        try:
            intervals.append(_parse_label_record(line))
        except ValueError as exc:
            err = RecordError(line_no, str(exc), source)
            if strict:
                raise err from None
            logger.warning("skipping label record (%s)", err)
    return intervals


def _parse_label_record(line: str) -> LabelInterval:
    parts = line.split("\t")
    if len(parts) != 3:
        raise ValueError(f"expected 3 tab-separated fields, got {len(parts)}")
    try:
        start = datetime.strptime(parts[0].strip(), "%Y/%m/%d %H:%M:%S")
        end = datetime.strptime(parts[1].strip(), "%Y/%m/%d %H:%M:%S")
    except ValueError:
        raise ValueError("bad interval timestamp") from None
    mode = parts[2].strip().lower()
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if start > end:
        raise ValueError("interval start after end")
    return LabelInterval(start, end, mode)


def assemble_samples(
    points: Iterable[GpsPoint],
    labels: Sequence[LabelInterval],
    split_on_interval_change: bool = True,
) -> list[TrajectorySample]:
    """Attach mode labels to points and group them into trajectory samples.

    Points are sorted per user by timestamp; duplicate timestamps keep the
    first occurrence so later time deltas are strictly positive.  A point is
    labeled by the covering interval (bounds inclusive) and unlabeled points
    are dropped.  Samples are cut per (user, calendar day, mode), and by
    default also whenever the covering interval changes, so two disjoint
    intervals of the same mode on one day stay separate samples.  Passing
    ``split_on_interval_change=False`` instead pools a whole day's points of
    one mode into a single sample.
    """
    intervals = sorted(labels, key=lambda iv: (iv.start, iv.end))
    if not intervals:
        return []
    starts = [iv.start for iv in intervals]
    prefix_max_end: list[datetime] = []
    running = intervals[0].end
    for iv in intervals:
        running = max(running, iv.end)
        prefix_max_end.append(running)

    def covering(ts: datetime) -> int | None:
        i = bisect.bisect_right(starts, ts) - 1
        while i >= 0:
            if intervals[i].end >= ts:
                return i
            if prefix_max_end[i] < ts:
                return None
            i -= 1
        return None

    by_user: dict[str, list[GpsPoint]] = {}
    for p in points:
        by_user.setdefault(p.user_id, []).append(p)

    samples: list[TrajectorySample] = []
    for user_id in sorted(by_user):
        stream = sorted(by_user[user_id], key=lambda p: p.timestamp)
        if split_on_interval_change:
            samples.extend(_group_by_interval_runs(user_id, stream, intervals, covering))
        else:
            samples.extend(_group_by_day_mode(user_id, stream, intervals, covering))
    return samples


def _dedup_in_order(stream: Sequence[GpsPoint]) -> Iterable[GpsPoint]:
    prev_ts = None
    for p in stream:
        if prev_ts is not None and p.timestamp == prev_ts:
            continue
        prev_ts = p.timestamp
        yield p


def _group_by_interval_runs(user_id, stream, intervals, covering) -> list[TrajectorySample]:
    samples: list[TrajectorySample] = []
    key = None
    buf: list[GpsPoint] = []
    for p in _dedup_in_order(stream):
        idx = covering(p.timestamp)
        if idx is None:
            continue
        next_key = (p.timestamp.date(), intervals[idx].mode, idx)
        if next_key != key and buf:
            samples.append(TrajectorySample(user_id, key[0], key[1], tuple(buf)))
            buf = []
        key = next_key
        buf.append(p)
    if buf:
        samples.append(TrajectorySample(user_id, key[0], key[1], tuple(buf)))
    return samples


def _group_by_day_mode(user_id, stream, intervals, covering) -> list[TrajectorySample]:
    groups: dict[tuple[date, str], list[GpsPoint]] = {}
    for p in _dedup_in_order(stream):
        idx = covering(p.timestamp)
        if idx is None:
            continue
        groups.setdefault((p.timestamp.date(), intervals[idx].mode), []).append(p)
    return [
        TrajectorySample(user_id, day, mode, tuple(pts))
        for (day, mode), pts in groups.items()
    ]


def filter_short(samples: Sequence[TrajectorySample], min_points: int = 10) -> list[TrajectorySample]:
    """Drop samples with fewer than ``min_points`` points (order preserved)."""
    if min_points < 4:
        raise ValueError(f"min_points must be at least 4, got {min_points}")
    return [s for s in samples if len(s.points) >= min_points]


def load_geolife(root: str | Path, min_points: int = 10, strict: bool = False) -> list[TrajectorySample]:
    """Walk a trajectory directory tree and return filtered samples.

    ``root`` may point either at the directory containing ``Data`` or at
    ``Data`` itself.  Users without a labels.txt contribute nothing.
    """
    root = Path(root)
    if (root / "Data").is_dir():
        root = root / "Data"
    if not root.is_dir():
        raise FileNotFoundError(f"no such data directory: {root}")
    samples: list[TrajectorySample] = []
    for user_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        labels_path = user_dir / "labels.txt"
        if not labels_path.is_file():
            continue
        labels = parse_labels(labels_path.read_text(), strict=strict, source=str(labels_path))
        if not labels:
            continue
        points: list[GpsPoint] = []
        traj_dir = user_dir / "Trajectory"
        if traj_dir.is_dir():
            for plt_path in sorted(traj_dir.glob("*.plt")):
                points.extend(
                    parse_plt(plt_path.read_text(), user_dir.name, strict=strict, source=str(plt_path))
                )
        samples.extend(assemble_samples(points, labels))
    return filter_short(samples, min_points)


def write_samples(samples: Iterable[TrajectorySample], path: str | Path) -> int:
    """Write samples as line-delimited JSON; returns the row count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            record = {
                "user_id": s.user_id,
                "day": s.day.isoformat(),
                "mode": s.mode,
                "points": [
                    [p.latitude, p.longitude, p.altitude, p.timestamp.isoformat()]
                    for p in s.points
                ],
            }
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
            n += 1
    return n


def read_samples(path: str | Path) -> list[TrajectorySample]:
    """Read a line-delimited JSON sample archive written by write_samples."""
    samples: list[TrajectorySample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                day = date.fromisoformat(rec["day"])
                pts = tuple(
                    GpsPoint(rec["user_id"], lat, lon, alt, datetime.fromisoformat(ts))
                    for lat, lon, alt, ts in rec["points"]
                )
                samples.append(TrajectorySample(rec["user_id"], day, rec["mode"], pts))
            except (KeyError, TypeError, ValueError) as exc:
                raise RecordError(line_no, f"bad archive record: {exc}", str(path)) from None
    return samples
