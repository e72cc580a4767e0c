"""Per-point kinematic series derived from consecutive GPS fixes.

Seven series are computed for a sample of n points (lengths in parentheses):
distance (n-1), speed (n-1), acceleration (n-2), jerk (n-3), bearing (n-1),
bearing rate (n-2), and rate of bearing rate (n-3).  Every difference is
divided by the time gap at the later index of the pair, so uniformly
stretching all time gaps by c scales speed by 1/c, acceleration by 1/c^2
and jerk by 1/c^3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import GpsPoint, TrajectorySample

EARTH_RADIUS_M = 6_371_000.0

FEATURE_NAMES = (
    "distance",
    "speed",
    "acceleration",
    "jerk",
    "bearing",
    "bearing_rate",
    "bearing_rate_rate",
)


@dataclass(frozen=True)
class PointFeatureSeries:
    """The seven per-point series of one trajectory sample."""

    distance: np.ndarray
    speed: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray
    bearing: np.ndarray
    bearing_rate: np.ndarray
    bearing_rate_rate: np.ndarray

    def series(self) -> tuple[np.ndarray, ...]:
        """All series in canonical order (matches FEATURE_NAMES)."""
        return (
            self.distance,
            self.speed,
            self.acceleration,
            self.jerk,
            self.bearing,
            self.bearing_rate,
            self.bearing_rate_rate,
        )


def _haversine(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters on a spherical earth; array-safe."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = np.radians(np.subtract(lat2, lat1))
    dlam = np.radians(np.subtract(lon2, lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    a = np.clip(a, 0.0, 1.0)
    return 2.0 * EARTH_RADIUS_M * np.arctan2(np.sqrt(a), np.sqrt(1.0 - a))


def _initial_bearing(lat1, lon1, lat2, lon2):
    """Forward azimuth in degrees in [0, 360); 0 for zero displacement."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dlam = np.radians(np.subtract(lon2, lon1))
    x = np.sin(dlam) * np.cos(phi2)
    y = np.cos(phi1) * np.sin(phi2) - np.sin(phi1) * np.cos(phi2) * np.cos(dlam)
    deg = np.degrees(np.arctan2(x, y)) % 360.0
    # a tiny negative azimuth can round the modulo up to exactly 360.0
    deg = np.where(deg >= 360.0, 0.0, deg)
    same = np.equal(lat1, lat2) & np.equal(lon1, lon2)
    return np.where(same, 0.0, deg)


def haversine_distance(p1: GpsPoint, p2: GpsPoint) -> float:
    """Great-circle distance between two fixes in meters."""
    return float(_haversine(p1.latitude, p1.longitude, p2.latitude, p2.longitude))


def initial_bearing(p1: GpsPoint, p2: GpsPoint) -> float:
    """Forward azimuth from p1 to p2, degrees clockwise from north in [0, 360)."""
    return float(_initial_bearing(p1.latitude, p1.longitude, p2.latitude, p2.longitude))


def rate_of_change(values, gaps) -> np.ndarray:
    """First difference of ``values`` divided by per-step time gaps.

    out[i] = (values[i+1] - values[i]) / gaps[i], where gaps[i] is the time
    gap that produced values[i+1].  Raises on length mismatch or
    non-positive gaps.
    """
    values = np.asarray(values, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if gaps.shape != (max(values.size - 1, 0),):
        raise ValueError(f"need {values.size - 1} gaps, got {gaps.size}")
    if np.any(gaps <= 0.0):
        raise ValueError("time gaps must be positive")
    return np.diff(values) / gaps


def compute_point_features(
    sample: TrajectorySample, wrap_bearing_diff: bool = False
) -> PointFeatureSeries:
    """Compute the seven kinematic series for one sample.

    Bearing differences are taken raw by default, so a swing through north
    (350 to 10 degrees) counts as -340 rather than +20; pass
    ``wrap_bearing_diff=True`` to map each difference into [-180, 180).

    Args:
        sample: at least 4 points with strictly increasing timestamps.
        wrap_bearing_diff: wrap bearing differences before dividing by time.

    Returns:
        PointFeatureSeries with lengths n-1, n-1, n-2, n-3, n-1, n-2, n-3.
    """
    pts = sample.points
    n = len(pts)
    if n < 4:
        raise ValueError(f"need at least 4 points, got {n}")
    lat = np.array([p.latitude for p in pts])
    lon = np.array([p.longitude for p in pts])
    t0 = pts[0].timestamp
    t = np.array([(p.timestamp - t0).total_seconds() for p in pts])
    dt = np.diff(t)
    if np.any(dt <= 0.0):
        raise ValueError("timestamps must be strictly increasing")

    distance = _haversine(lat[:-1], lon[:-1], lat[1:], lon[1:])
    speed = distance / dt
    acceleration = rate_of_change(speed, dt[1:])
    jerk = rate_of_change(acceleration, dt[2:])

    bearing = _initial_bearing(lat[:-1], lon[:-1], lat[1:], lon[1:])
    db = np.diff(bearing)
    if wrap_bearing_diff:
        db = (db + 180.0) % 360.0 - 180.0
    bearing_rate = db / dt[1:]
    bearing_rate_rate = rate_of_change(bearing_rate, dt[2:])

    return PointFeatureSeries(
        distance=distance,
        speed=speed,
        acceleration=acceleration,
        jerk=jerk,
        bearing=bearing,
        bearing_rate=bearing_rate,
        bearing_rate_rate=bearing_rate_rate,
    )
