"""Seed-deterministic synthetic trajectories for tests and benchmarks.

Each sample is a random walk: per step the speed is drawn from a mode's
Gaussian profile (floored at 0.1 m/s), the heading drifts by a Gaussian
increment, and the position advances on an equirectangular approximation
with a fixed 1-second cadence.  Every sample gets its own calendar day so
an emitted directory tree re-ingests into exactly the same samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import MODES, GpsPoint, TrajectorySample
from .pointfeat import EARTH_RADIUS_M
from .trajfeat import SampleRef, sample_refs

ORIGIN_LAT = 39.9
ORIGIN_LON = 116.4
START_DAY = date(2008, 5, 1)
START_CLOCK = time(8, 0, 0)
SYNTH_USER = "000"
MIN_STEP_SPEED = 0.1
CORRUPT_POINT_SHARE = 0.2
CORRUPT_JUMP_RANGE = (0.05, 0.2)

# serial-date epoch used by the point log format
_SERIAL_EPOCH = datetime(1899, 12, 30)

PLT_HEADER = (
    "Geolife trajectory\n"
    "WGS 84\n"
    "Altitude is in Feet\n"
    "Reserved 3\n"
    "0,2,255,My Track,0,0,2,8421376\n"
    "0\n"
)
LABELS_HEADER = "Start Time\tEnd Time\tTransportation Mode\n"


@dataclass(frozen=True)
class ModeProfile:
    """Motion profile of one transportation mode."""

    mode: str
    speed_mean: float
    speed_sd: float
    heading_volatility: float
    points_per_sample: int = 60
    samples: int = 200

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.speed_mean <= 0.0 or self.speed_sd < 0.0:
            raise ValueError("speed_mean must be positive and speed_sd non-negative")
        if self.heading_volatility < 0.0:
            raise ValueError("heading_volatility must be non-negative")
        if self.points_per_sample < 10:
            raise ValueError("points_per_sample must be at least 10")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")


DEFAULT_PROFILES: tuple[ModeProfile, ...] = (
    ModeProfile("walk", 1.4, 0.3, 25.0),
    ModeProfile("bike", 4.0, 1.0, 10.0),
    ModeProfile("bus", 8.0, 3.0, 6.0),
    ModeProfile("car", 15.0, 5.0, 4.0),
)


def profiles_from_dicts(records: Sequence[dict]) -> tuple[ModeProfile, ...]:
    """Build profiles from parsed JSON records (unknown keys rejected)."""
    profiles = []
    fields = {"mode", "speed_mean", "speed_sd", "heading_volatility", "points_per_sample", "samples"}
    for rec in records:
        extra = set(rec) - fields
        if extra:
            raise ValueError(f"unknown profile keys: {sorted(extra)}")
        profiles.append(ModeProfile(**rec))
    if not profiles:
        raise ValueError("profile list is empty")
    return tuple(profiles)


def generate(profiles: Sequence[ModeProfile] = DEFAULT_PROFILES, seed: int = 0) -> list[TrajectorySample]:
    """Generate samples for every profile, fully determined by the seed.

    Sample i of profile p draws from an independent stream seeded by
    (seed, p, i), so any subset can be regenerated without the rest.
    """
    samples: list[TrajectorySample] = []
    day_index = 0
    for pi, profile in enumerate(profiles):
        for si in range(profile.samples):
            rng = np.random.default_rng([seed, pi, si])
            day = START_DAY + timedelta(days=day_index)
            day_index += 1
            samples.append(_generate_sample(profile, rng, day))
    return samples


def _generate_sample(profile: ModeProfile, rng: np.random.Generator, day: date) -> TrajectorySample:
    t0 = datetime.combine(day, START_CLOCK)
    lat = ORIGIN_LAT + rng.uniform(-0.05, 0.05)
    lon = ORIGIN_LON + rng.uniform(-0.05, 0.05)
    heading = rng.uniform(0.0, 360.0)
    deg = 180.0 / math.pi
    points = []
    for i in range(profile.points_per_sample):
        points.append(
            GpsPoint(SYNTH_USER, lat, lon, 0.0, t0 + timedelta(seconds=i))
        )
        if i == profile.points_per_sample - 1:
            break
        speed = max(rng.normal(profile.speed_mean, profile.speed_sd), MIN_STEP_SPEED)
        theta = math.radians(heading % 360.0)
        lat += speed * math.cos(theta) / EARTH_RADIUS_M * deg
        lon += speed * math.sin(theta) / (EARTH_RADIUS_M * math.cos(math.radians(lat))) * deg
        heading += rng.normal(0.0, profile.heading_volatility)
    return TrajectorySample(SYNTH_USER, day, profile.mode, tuple(points))


def corrupt(
    samples: Sequence[TrajectorySample], fraction: float, seed: int = 0
) -> tuple[list[TrajectorySample], list[SampleRef]]:
    """Teleport points in a deterministic fraction of samples.

    A corrupted sample has 20% of its points displaced by a 0.05 to 0.2
    degree jump in a random direction, leaving labels, timestamps and point
    counts untouched.  Returns the new sample list (input order) and the
    refs of the corrupted samples.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    refs = sample_refs(samples)
    n_corrupt = round(fraction * len(samples))
    if n_corrupt == 0:
        return list(samples), []
    rng = np.random.default_rng([seed, 0])
    chosen = sorted(rng.choice(len(samples), size=n_corrupt, replace=False).tolist())
    chosen_set = set(chosen)
    out: list[TrajectorySample] = []
    for i, sample in enumerate(samples):
        if i not in chosen_set:
            out.append(sample)
            continue
        out.append(_corrupt_sample(sample, np.random.default_rng([seed, 1, i])))
    return out, [refs[i] for i in chosen]


def _corrupt_sample(sample: TrajectorySample, rng: np.random.Generator) -> TrajectorySample:
    n = len(sample.points)
    n_tele = max(1, round(CORRUPT_POINT_SHARE * n))
    targets = set(rng.choice(n, size=n_tele, replace=False).tolist())
    points = list(sample.points)
    for idx in sorted(targets):
        magnitude = rng.uniform(*CORRUPT_JUMP_RANGE)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        p = points[idx]
        points[idx] = GpsPoint(
            p.user_id,
            p.latitude + magnitude * math.cos(angle),
            p.longitude + magnitude * math.sin(angle),
            p.altitude,
            p.timestamp,
        )
    return TrajectorySample(sample.user_id, sample.day, sample.mode, tuple(points))


def write_geolife_tree(samples: Sequence[TrajectorySample], root: str | Path) -> Path:
    """Emit samples as a point-log directory tree that re-ingests losslessly.

    Layout: <root>/Data/<user>/Trajectory/*.plt plus one labels.txt per
    user with an interval per sample.  Coordinates are written at full
    float precision and timestamps at 1-second resolution, so a round trip
    through the ingest stage reproduces the samples exactly.
    """
    root = Path(root)
    data_dir = root / "Data"
    by_user: dict[str, list[TrajectorySample]] = {}
    for s in samples:
        by_user.setdefault(s.user_id, []).append(s)
    for user_id, user_samples in sorted(by_user.items()):
        user_dir = data_dir / user_id
        traj_dir = user_dir / "Trajectory"
        traj_dir.mkdir(parents=True, exist_ok=True)
        label_lines = [LABELS_HEADER]
        used_names: set[str] = set()
        for s in sorted(user_samples, key=lambda s: s.points[0].timestamp):
            start = s.points[0].timestamp
            end = s.points[-1].timestamp
            label_lines.append(
                f"{start:%Y/%m/%d %H:%M:%S}\t{end:%Y/%m/%d %H:%M:%S}\t{s.mode}\n"
            )
            name = f"{start:%Y%m%d%H%M%S}"
            suffix = 0
            while f"{name}.plt" in used_names:
                suffix += 1
                name = f"{start:%Y%m%d%H%M%S}_{suffix}"
            used_names.add(f"{name}.plt")
            with open(traj_dir / f"{name}.plt", "w", encoding="utf-8") as fh:
                fh.write(PLT_HEADER)
                for p in s.points:
                    serial = (p.timestamp - _SERIAL_EPOCH).total_seconds() / 86400.0
                    fh.write(
                        f"{p.latitude!r},{p.longitude!r},0,{p.altitude!r},"
                        f"{serial!r},{p.timestamp:%Y-%m-%d},{p.timestamp:%H:%M:%S}\n"
                    )
        (user_dir / "labels.txt").write_text("".join(label_lines), encoding="utf-8")
    return data_dir
